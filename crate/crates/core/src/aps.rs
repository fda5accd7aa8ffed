//! The APS side of the domain-wall index theorem on a torus split into two halves.
//!
//! `X₊` is a band of columns of the torus. Its boundary is two circles; in an
//! axial gauge (uniform y-links in every column) the operator restricted to
//! `X₊` is a line along x with internal space `ℂ^{n_y}`:
//! `c ⊗ ∇_x + ε ⊗ (W_x + A(h(x)))`, where `A(h)` is the spectral circle
//! operator at the column holonomy `h(x)`. Flat cylinders are attached at both
//! ends, and the boundary conditions remove, at the left ring, the chirality `+`
//! components along negative modes of `A` and, at the right ring, the chirality
//! `−` components along positive modes of the outward-oriented boundary
//! operator `−A`.

use crate::error::{Error, Result};
use crate::gauge::GaugeLinkField;
use crate::lattice::{Boundary, Lattice1D, TorusLattice2D};
use crate::linalg::{self, CMat, C64};
use crate::operators::{
    apply_domain_wall, assemble_wilson_line, build_circle_operator_a, build_torus_dirac, circle_spectrum, chiral_end_compression,
    GeometryTag, Grading, GradedOperator, Layout, TorusScheme,
};
use crate::profile::{smooth_wall_profile, WallProfile};
use crate::spectral::{self, eigen, eta_sign_sum, IndexPath, IndexResult};
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct APSBoundarySetup {
    pub boundary_op: GradedOperator,
    pub projector: CMat,
    pub lambda_a: f64,
    pub rank: usize,
    pub idempotency_residual: f64,
    pub commutation_residual: f64,
}

/// Projector onto the span of eigenvectors of `A` with positive eigenvalue.
pub fn positive_spectral_projection(a: &GradedOperator, eps0: Option<f64>) -> Result<APSBoundarySetup> {
    let spec = eigen(a, true, None)?;
    let eps = eps0.unwrap_or(spec.zero_threshold);
    if let Some(&z) = spec.eigenvalues.iter().find(|l| l.abs() <= eps) {
        return Err(Error::ZeroModeOnBoundary(z));
    }
    let v = spec.eigenvectors.as_ref().expect("vectors");
    let n = a.dim();
    let pos: Vec<usize> = (0..n).filter(|&j| spec.eigenvalues[j] > 0.0).collect();
    let vp = Mat::from_fn(n, pos.len(), |i, j| v[(i, pos[j])]);
    let p = &vp * vp.adjoint();
    let p2 = &p * &p;
    let idem = linalg::max_abs(linalg::sub(p2.as_ref(), p.as_ref()).as_ref()).max(linalg::hermiticity_residual(p.as_ref()));
    let pa = &p * &a.matrix;
    let ap = &a.matrix * &p;
    let comm = linalg::max_abs(linalg::sub(pa.as_ref(), ap.as_ref()).as_ref());
    let lambda_a = spec.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    if idem > 1e-12 || comm > 1e-12 * a.norm_max().max(1.0) {
        return Err(Error::InvariantViolated(format!("projector residuals {idem:e}, {comm:e}")));
    }
    Ok(APSBoundarySetup {
        boundary_op: a.clone(),
        projector: p,
        lambda_a,
        rank: pos.len(),
        idempotency_residual: idem,
        commutation_residual: comm,
    })
}

/// Eta invariant of `−i∂ + a` on a circle: `1 − 2{a}` with `{a}` the fractional part.
pub fn eta_circle_exact(a: f64) -> Result<f64> {
    let f = a.rem_euclid(1.0);
    if f < 1e-12 || f > 1.0 - 1e-12 {
        return Err(Error::IntegerHolonomy(a));
    }
    Ok(1.0 - 2.0 * f)
}

/// Truncated eta of the circle operator: the plain sign-sum over the
/// `n`-point Fourier window and the heat-damped sum `Σ sign(λ) e^{−t|λ|}`
/// over the same window with `t = 1/√n`, so the damping outruns the window
/// edge while its `O(t²)` bias vanishes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleEtaRow {
    pub n: usize,
    pub sign_sum: i64,
    pub heat_damped: f64,
}

pub fn circle_eta_convergence(a: f64, sizes: &[usize]) -> Vec<CircleEtaRow> {
    sizes
        .iter()
        .map(|&n| {
            let lo = -(n as i64 / 2);
            let t = 1.0 / (n as f64).sqrt();
            let (mut s, mut h) = (0i64, 0.0);
            for k in lo..lo + n as i64 {
                let l = k as f64 + a;
                s += l.signum() as i64;
                h += l.signum() * (-t * l.abs()).exp();
            }
            CircleEtaRow { n, sign_sum: s, heat_damped: h }
        })
        .collect()
}

/// The line operator on `X₊` plus cylinders, before boundary conditions.
#[derive(Clone, Debug)]
pub struct HalfTorusProblem {
    pub operator: GradedOperator,
    pub line: Lattice1D,
    /// Torus column of each line site; `None` on the attached cylinders.
    pub columns: Vec<Option<usize>>,
    pub holonomy_left: f64,
    pub holonomy_right: f64,
    pub left: APSBoundarySetup,
    /// Built from the outward-oriented boundary operator `−A(h_right)`.
    pub right: APSBoundarySetup,
    pub collar_residual: f64,
    pub n_y: usize,
    pub cylinder_len: usize,
    pub wilson_r: f64,
}

/// Wilson parameter for the x-line. Directions of `A` below `−2r/a` behave
/// like doublers and would bind edge pairs under the boundary conditions, so
/// `r` is raised until the whole spectrum of `A` sits above that threshold.
pub fn line_wilson_parameter(spacing: f64, a_norm: f64) -> f64 {
    (0.65 * spacing * a_norm).max(1.0)
}

/// Column holonomies of `X₊`, unwrapped by accumulating the flux of each strip.
pub fn unwrapped_holonomies(lat: &TorusLattice2D, gauge: &GaugeLinkField) -> Vec<f64> {
    let mut h = vec![gauge.column_holonomy(lat.x_plus.start)];
    for ix in lat.x_plus.start..lat.x_plus.end - 1 {
        let last = *h.last().expect("nonempty");
        h.push(last - gauge.strip_flux(ix));
    }
    h
}

pub fn build_half_torus_problem(lat: &TorusLattice2D, gauge: &GaugeLinkField, cylinder_len: usize) -> Result<HalfTorusProblem> {
    let ny = lat.n_y;
    let cols: Vec<usize> = lat.x_plus.clone().collect();
    let hol = unwrapped_holonomies(lat, gauge);
    // Axial gauge: θ(ix, ·) makes the y-links of column ix uniform.
    let theta: Vec<Vec<f64>> = cols
        .iter()
        .zip(&hol)
        .map(|(&ix, &h)| {
            let mut t = vec![0.0; ny];
            for iy in 0..ny - 1 {
                t[iy + 1] = t[iy] + gauge.phase_y[ix * ny + iy] - 2.0 * PI * h / ny as f64;
            }
            t
        })
        .collect();
    let circle = |h: f64| build_circle_operator_a(ny, h, lat.extent_y);
    let a_cols: Vec<GradedOperator> = hol.iter().map(|&h| circle(h)).collect::<Result<_>>()?;
    let n_line = cols.len() + 2 * cylinder_len;
    let line = Lattice1D::new(n_line, (n_line + 1) as f64 * lat.spacing_x(), Boundary::Dirichlet)?;
    let mut columns = vec![None; cylinder_len];
    columns.extend(cols.iter().map(|&c| Some(c)));
    columns.extend(std::iter::repeat(None).take(cylinder_len));
    let col_of = |s: usize| -> usize { s.saturating_sub(cylinder_len).min(cols.len() - 1) };
    let mass = |s: usize| a_cols[col_of(s)].matrix.clone();
    let link = |s: usize| -> Option<Vec<C64>> {
        let (p, q) = (columns[s]?, columns.get(s + 1).copied().flatten()?);
        let (j, jn) = (p - lat.x_plus.start, q - lat.x_plus.start);
        Some(
            (0..ny)
                .map(|iy| C64::from_polar(1.0, gauge.phase_x[p * ny + iy] + theta[j][iy] - theta[jn][iy]))
                .collect(),
        )
    };
    let a_norm = hol
        .iter()
        .flat_map(|&h| circle_spectrum(ny, h, lat.extent_y))
        .fold(0.0, |m: f64, l| m.max(l.abs()));
    let wilson_r = line_wilson_parameter(lat.spacing_x(), a_norm);
    let h = assemble_wilson_line(&line, ny, wilson_r, &mass, &link);

    // Product form on the collars: constant A and trivial x-links.
    let w = lat.collar_width;
    let mut collar = 0.0f64;
    for (j, a) in a_cols.iter().enumerate() {
        let reference = if j < w {
            &a_cols[0]
        } else if j + w >= cols.len() {
            &a_cols[cols.len() - 1]
        } else {
            continue;
        };
        collar = collar.max(linalg::max_abs(linalg::sub(a.matrix.as_ref(), reference.matrix.as_ref()).as_ref()));
    }
    for s in 0..n_line - 1 {
        let j = col_of(s);
        if j < w || j + w >= cols.len() {
            if let Some(ph) = link(s) {
                collar = collar.max(ph.iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max));
            }
        }
    }
    if collar > 1e-10 {
        return Err(Error::BoundaryNotProductForm(collar));
    }

    let left = positive_spectral_projection(&a_cols[0], None)?;
    let a_r = &a_cols[cols.len() - 1];
    let oriented = GradedOperator::new(
        Mat::from_fn(ny, ny, |i, j| -a_r.matrix[(i, j)]),
        None,
        a_r.geometry_tag.clone().with("orientation", "outward"),
    )?;
    let right = positive_spectral_projection(&oriented, None)?;
    let grading: Vec<f64> = (0..2 * n_line * ny).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let tag = GeometryTag::new(line.geometry_key(), "half-torus line operator")
        .with("torus", lat.geometry_key())
        .with("cylinder_len", cylinder_len)
        .with("holonomy_left", hol[0])
        .with("holonomy_right", hol[hol.len() - 1]);
    let operator = GradedOperator::new(h, Some(Grading::Diagonal(grading)), tag)?.with_layout(Layout { sites: n_line, comps: 2 * ny });
    Ok(HalfTorusProblem {
        operator,
        line,
        columns,
        holonomy_left: hol[0],
        holonomy_right: hol[hol.len() - 1],
        left,
        right,
        collar_residual: collar,
        n_y: ny,
        cylinder_len,
        wilson_r,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApsIndexReport {
    pub index: IndexResult,
    pub constrained_dim: usize,
    /// Fraction of the kernel's norm on the columns of `X₊` (not the cylinders).
    pub kernel_weight_in_x_plus: f64,
    pub holonomy_left: f64,
    pub holonomy_right: f64,
    pub lambda_a_left: f64,
    pub lambda_a_right: f64,
    pub collar_residual: f64,
    pub cylinder_len: usize,
    pub wilson_r: f64,
}

/// Index of the half-torus operator under the APS boundary conditions.
pub fn aps_index(problem: &HalfTorusProblem, eps0: Option<f64>) -> Result<ApsIndexReport> {
    let n = problem.line.n_sites;
    let d = problem.n_y;
    let neg_a_right = Mat::from_fn(d, d, |i, j| -problem.right.boundary_op.matrix[(i, j)]);
    let ends = chiral_end_compression(n, d, &problem.left.boundary_op.matrix, &neg_a_right);
    let hc = ends.compress(&problem.operator.matrix);
    let op = GradedOperator::new(hc, Some(Grading::Diagonal(ends.labels.clone())), problem.operator.geometry_tag.clone())?;
    if !op.chiral_flag {
        return Err(Error::NotChiral);
    }
    let spec = eigen(&op, true, None)?;
    let eps = eps0.unwrap_or(spec.zero_threshold);
    let v = spec.eigenvectors.as_ref().expect("vectors");
    let ker: Vec<usize> = (0..spec.eigenvalues.len()).filter(|&i| spec.eigenvalues[i].abs() <= eps).collect();
    let k = Mat::from_fn(v.nrows(), ker.len(), |i, j| v[(i, ker[j])]);
    let grading = op.grading.as_ref().expect("graded");
    let mut index = spectral::kernel_chirality(&k, grading, eps, IndexPath::Constrained)?;
    index.path = IndexPath::Constrained;
    let basis = ends.basis();
    let full = &basis * &k;
    let comps = 2 * d;
    let (mut inside, mut total) = (0.0, 0.0);
    for s in 0..n {
        for c in 0..comps {
            for j in 0..full.ncols() {
                let w = full[(s * comps + c, j)].norm_sqr();
                total += w;
                if problem.columns[s].is_some() {
                    inside += w;
                }
            }
        }
    }
    Ok(ApsIndexReport {
        index,
        constrained_dim: op.dim(),
        kernel_weight_in_x_plus: if total > 0.0 { inside / total } else { 1.0 },
        holonomy_left: problem.holonomy_left,
        holonomy_right: problem.holonomy_right,
        lambda_a_left: problem.left.lambda_a,
        lambda_a_right: problem.right.lambda_a,
        collar_residual: problem.collar_residual,
        cylinder_len: problem.cylinder_len,
        wilson_r: problem.wilson_r,
    })
}

/// Parameters of the main-theorem scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremSetup {
    pub m_values: Vec<f64>,
    pub widths: Vec<f64>,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub scheme: TorusScheme,
    pub cylinder_len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsPoint {
    pub m: f64,
    pub width: f64,
    pub eta_dw: i64,
    pub eta_const: i64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub first: usize,
    pub last: usize,
    pub m_lo: f64,
    pub m_hi: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremReport {
    pub aps_index: i64,
    pub aps: ApsIndexReport,
    /// Etas at the first plateau point (first width).
    pub eta_dw: i64,
    pub eta_const: i64,
    pub rhs: f64,
    pub m_values: Vec<f64>,
    pub widths: Vec<f64>,
    pub points: Vec<RhsPoint>,
    /// Common value over all widths at each mass, `None` where widths disagree.
    pub rhs_by_mass: Vec<Option<f64>>,
    pub plateau_found: bool,
    pub plateau: Option<Plateau>,
    pub agrees: bool,
}

/// Right-hand side `(η(D + mκΓ) − η(D − mΓ))/2` at one mass for each width.
pub fn rhs_scan_point(
    d: &GradedOperator,
    lat: &TorusLattice2D,
    m: f64,
    widths: &[f64],
    kappa_plus: f64,
    kappa_minus: f64,
) -> Result<Vec<RhsPoint>> {
    let step = WallProfile::step_torus(lat, kappa_plus, kappa_minus);
    let konst = WallProfile::constant_torus(lat, -1.0);
    let eta_const = eta_sign_sum(&eigen(&apply_domain_wall(d, m, &konst)?, false, None)?, false)?.value;
    widths
        .iter()
        .map(|&w| {
            let k = smooth_wall_profile(&step, w, lat.spacing_x())?.profile;
            let eta_dw = eta_sign_sum(&eigen(&apply_domain_wall(d, m, &k)?, false, None)?, false)?.value;
            Ok(RhsPoint { m, width: w, eta_dw, eta_const, rhs: (eta_dw - eta_const) as f64 / 2.0 })
        })
        .collect()
}

/// Longest run of at least three consecutive equal values (first on ties).
pub fn find_plateau(m_values: &[f64], values: &[Option<f64>]) -> Option<Plateau> {
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < values.len() {
        let Some(v) = values[i] else {
            i += 1;
            continue;
        };
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == Some(v) {
            j += 1;
        }
        if j - i + 1 >= 3 && best.map_or(true, |(a, b)| j - i > b - a) {
            best = Some((i, j));
        }
        i = j + 1;
    }
    best.map(|(a, b)| Plateau {
        first: a,
        last: b,
        m_lo: m_values[a],
        m_hi: m_values[b],
        value: values[a].expect("plateau value"),
    })
}

/// APS index of `X₊` against the domain-wall eta difference on the whole torus.
pub fn main_theorem_check(lat: &TorusLattice2D, gauge: &GaugeLinkField, setup: &MainTheoremSetup) -> Result<MainTheoremReport> {
    if setup.m_values.is_empty() || setup.widths.is_empty() {
        return Err(Error::InvalidArgument("mass and width scans must be nonempty".into()));
    }
    if setup.kappa_plus * setup.kappa_minus >= 0.0 {
        return Err(Error::InvalidArgument("wall levels must have opposite signs".into()));
    }
    let problem = build_half_torus_problem(lat, gauge, setup.cylinder_len)?;
    let aps = aps_index(&problem, None)?;
    let d = build_torus_dirac(lat, gauge, setup.scheme)?;
    let per_mass: Vec<Vec<RhsPoint>> = setup
        .m_values
        .par_iter()
        .map(|&m| rhs_scan_point(&d, lat, m, &setup.widths, setup.kappa_plus, setup.kappa_minus))
        .collect::<Result<_>>()?;
    let rhs_by_mass: Vec<Option<f64>> = per_mass
        .iter()
        .map(|pts| {
            let v = pts[0].rhs;
            pts.iter().all(|p| p.rhs == v).then_some(v)
        })
        .collect();
    let plateau = find_plateau(&setup.m_values, &rhs_by_mass);
    let points: Vec<RhsPoint> = per_mass.into_iter().flatten().collect();
    let nw = setup.widths.len();
    let (eta_dw, eta_const, rhs) = match &plateau {
        Some(p) => {
            let pt = &points[p.first * nw];
            (pt.eta_dw, pt.eta_const, pt.rhs)
        }
        None => return Err(Error::NoPlateau),
    };
    Ok(MainTheoremReport {
        aps_index: aps.index.index,
        agrees: rhs == aps.index.index as f64,
        aps,
        eta_dw,
        eta_const,
        rhs,
        m_values: setup.m_values.clone(),
        widths: setup.widths.clone(),
        points,
        rhs_by_mass,
        plateau_found: plateau.is_some(),
        plateau,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub m: f64,
    pub smallest_abs: f64,
    pub eigenvalues_inside: Vec<f64>,
    pub gap_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScanReport {
    pub half_width: f64,
    pub points: Vec<GapPoint>,
    /// Smallest scanned mass from which the gap holds at every larger scanned mass.
    pub m_star: Option<f64>,
}

/// Scans `D + mκΓ` over `m_values` (ascending) for eigenvalues in `(−half_width, half_width)`.
pub fn gap_scan(d: &GradedOperator, kappa: &WallProfile, m_values: &[f64], half_width: f64) -> Result<GapScanReport> {
    if m_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("gap scan masses must be strictly increasing".into()));
    }
    let points: Vec<GapPoint> = m_values
        .par_iter()
        .map(|&m| {
            let spec = eigen(&apply_domain_wall(d, m, kappa)?, false, None)?;
            let report = spectral::spectral_gap_check(&spec, -half_width, half_width, false)?;
            Ok(GapPoint {
                m,
                smallest_abs: spec.eigenvalues.iter().fold(f64::INFINITY, |a, l| a.min(l.abs())),
                eigenvalues_inside: report.eigenvalues_inside,
                gap_holds: report.gap_holds,
            })
        })
        .collect::<Result<_>>()?;
    let tail = points.iter().rev().take_while(|p| p.gap_holds).count();
    let m_star = (tail > 0).then(|| points[points.len() - tail].m);
    Ok(GapScanReport { half_width, points, m_star })
}
