use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice has {0} sites; at least 8 are required")]
    DegenerateLattice(usize),
    #[error("periodic profile changes sign {0} times; a circle needs an even count")]
    OddWallCountOnCircle(usize),
    #[error("boundary operator has a zero mode (holonomy {0} is an integer or an eigenvalue lies within the threshold)")]
    ZeroModeOnBoundary(f64),
    #[error("holonomy {0} is an integer")]
    IntegerHolonomy(f64),
    #[error("localized flux window [{lo}, {hi}) touches a collar band")]
    FluxInCollar { lo: usize, hi: usize },
    #[error("the spectral chiral scheme needs a flat connection; largest plaquette angle is {0:e}")]
    ChiralSchemeWithFlux(f64),
    #[error("wall profile geometry `{profile}` does not match operator geometry `{operator}`")]
    GeometryMismatch { profile: String, operator: String },
    #[error("profile is not constant near the ends of the s-lattice")]
    ProfileNotAsymptoticallyConstant,
    #[error("smoothing width {width} is below the lattice resolution {spacing}")]
    WidthBelowResolution { width: f64, spacing: f64 },
    #[error("operator has no chirality grading")]
    MissingGrading,
    #[error("operator is not odd with respect to its grading")]
    NotChiral,
    #[error("eigensolver failed: {0}")]
    SolverFailure(String),
    #[error("{n_zero} eigenvalue(s) within the zero threshold {threshold:e}")]
    ZeroModePresent { n_zero: usize, threshold: f64 },
    #[error("chirality trace {0} is not within 0.01 of an integer")]
    NonIntegerTrace(f64),
    #[error("fit quality r^2 = {0:.4} is below 0.9")]
    FitUnstable(f64),
    #[error("boundary collar deviates from product form by {0:e}")]
    BoundaryNotProductForm(f64),
    #[error("no three consecutive mass values share an integer value")]
    NoPlateau,
    #[error("regions overlap by {0} sites; at least 8 are required")]
    OverlapTooThin(usize),
    #[error("commutator couples sites beyond the overlap by {0} sites")]
    NonLocalStencil(usize),
    #[error("precondition violated for modes {0:?}")]
    PreconditionViolated(Vec<usize>),
    #[error("spectrum has eigenvalues {0:?} inside the excluded gap")]
    GapNotSatisfied(Vec<f64>),
    #[error("mass squared {m_sq} does not exceed the bound {bound}")]
    MassTooSmall { m_sq: f64, bound: f64 },
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
