//! Finite Hermitian discretizations and the graded-operator container.

mod io;
mod line;
mod torus;

pub use io::{read_triplets, write_triplets, TripletHeader};
pub use line::{
    assemble_wilson_line, build_cylinder_extension, build_jackiw_rebbi_line, chiral_end_compression, EndCompression,
};
pub use torus::{build_circle_operator_a, build_torus_dirac, circle_spectrum, TorusScheme};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::profile::{ProfileKind, WallProfile};
use faer::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// An involution Γ, stored as its diagonal whenever it is diagonal.
#[derive(Clone, Debug)]
pub enum Grading {
    Diagonal(Vec<f64>),
    Dense(CMat),
}

impl Grading {
    pub fn to_matrix(&self) -> CMat {
        match self {
            Grading::Diagonal(d) => linalg::from_real_diag(d),
            Grading::Dense(g) => g.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Grading::Diagonal(d) => d.len(),
            Grading::Dense(g) => g.nrows(),
        }
    }

    /// `Γ v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        match self {
            Grading::Diagonal(d) => v.iter().zip(d).map(|(x, s)| x * s).collect(),
            Grading::Dense(g) => linalg::mat_vec(g.as_ref(), v),
        }
    }

    /// `⟨v, Γ v⟩`, real for Hermitian Γ.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        linalg::dot(v, &self.apply(v)).re
    }
}

/// Where a matrix came from: a geometry key used for compatibility checks and
/// free-form parameters for reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometryTag {
    pub key: String,
    pub description: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl GeometryTag {
    pub fn new(key: impl Into<String>, description: impl Into<String>) -> Self {
        Self { key: key.into(), description: description.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, value: impl Serialize) -> Self {
        self.params.insert(name.to_string(), serde_json::to_value(value).expect("serializable parameter"));
        self
    }
}

/// Sites and components per site of the uncompressed basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub sites: usize,
    pub comps: usize,
}

#[derive(Clone, Debug)]
pub struct GradedOperator {
    pub matrix: CMat,
    pub grading: Option<Grading>,
    pub chiral_flag: bool,
    pub geometry_tag: GeometryTag,
    /// Site structure of the uncompressed basis, if any.
    pub layout: Option<Layout>,
    /// Isometry from the operator's basis into the uncompressed site basis,
    /// present when boundary conditions removed some components.
    pub embedding: Option<Arc<CMat>>,
    /// Mass used by the overlap construction when the operator is not odd.
    pub index_mass: Option<f64>,
}

impl GradedOperator {
    /// Validates hermiticity and the grading, then sets `chiral_flag` from the
    /// measured anticommutator.
    pub fn new(matrix: CMat, grading: Option<Grading>, geometry_tag: GeometryTag) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::InvalidArgument("operator matrix must be square".into()));
        }
        let scale = linalg::max_abs(matrix.as_ref());
        let herm = linalg::hermiticity_residual(matrix.as_ref());
        if herm > 1e-12 * (1.0 + scale) {
            return Err(Error::InvariantViolated(format!("hermiticity residual {herm:e}")));
        }
        if let Some(g) = &grading {
            if g.dim() != n {
                return Err(Error::InvalidArgument("grading dimension differs from operator".into()));
            }
            check_involution(g)?;
        }
        let mut op = Self {
            matrix,
            grading,
            chiral_flag: false,
            geometry_tag,
            layout: None,
            embedding: None,
            index_mass: None,
        };
        op.chiral_flag = op.grading.is_some() && op.anticommutator_residual() <= 1e-10 * scale.max(f64::MIN_POSITIVE);
        Ok(op)
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn with_embedding(mut self, embedding: CMat) -> Self {
        self.embedding = Some(Arc::new(embedding));
        self
    }

    pub fn with_index_mass(mut self, m: f64) -> Self {
        self.index_mass = Some(m);
        self
    }

    /// Replaces the grading and recomputes `chiral_flag`.
    pub fn regraded(&self, grading: Option<Grading>) -> Result<Self> {
        let mut op = Self::new(self.matrix.clone(), grading, self.geometry_tag.clone())?;
        op.layout = self.layout;
        op.embedding = self.embedding.clone();
        op.index_mass = self.index_mass;
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm_max(&self) -> f64 {
        linalg::max_abs(self.matrix.as_ref())
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(self.matrix.as_ref())
    }

    /// `‖ΓM + MΓ‖_max`, or infinity without a grading.
    pub fn anticommutator_residual(&self) -> f64 {
        let Some(g) = &self.grading else { return f64::INFINITY };
        let m = &self.matrix;
        match g {
            Grading::Diagonal(d) => {
                let mut worst = 0.0f64;
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        worst = worst.max((m[(i, j)] * (d[i] + d[j])).norm());
                    }
                }
                worst
            }
            Grading::Dense(gm) => linalg::max_abs((gm * m + m * gm).as_ref()),
        }
    }

    pub fn grading_matrix(&self) -> Result<CMat> {
        self.grading.as_ref().map(Grading::to_matrix).ok_or(Error::MissingGrading)
    }
}

fn check_involution(g: &Grading) -> Result<()> {
    match g {
        Grading::Diagonal(d) => {
            if d.iter().any(|&s| s != 1.0 && s != -1.0) {
                return Err(Error::InvariantViolated("diagonal grading entries must be ±1".into()));
            }
        }
        Grading::Dense(m) => {
            let herm = linalg::hermiticity_residual(m.as_ref());
            let sq = m * m;
            let dev = linalg::max_abs(linalg::sub(sq.as_ref(), linalg::identity(m.nrows()).as_ref()).as_ref());
            if herm > 1e-14 || dev > 1e-14 {
                return Err(Error::InvariantViolated(format!(
                    "grading is not a Hermitian involution (herm {herm:e}, square {dev:e})"
                )));
            }
        }
    }
    Ok(())
}

/// `D + m·diag(κ)·Γ`, with `κ` applied per site. The result carries no grading.
pub fn apply_domain_wall(d: &GradedOperator, m: f64, kappa: &WallProfile) -> Result<GradedOperator> {
    let grading = d.grading.as_ref().ok_or(Error::MissingGrading)?;
    if kappa.geometry_key != d.geometry_tag.key {
        return Err(Error::GeometryMismatch { profile: kappa.geometry_key.clone(), operator: d.geometry_tag.key.clone() });
    }
    let constant = kappa.kind == ProfileKind::Constant;
    let comps = match d.layout {
        _ if constant => 1,
        Some(l) if l.sites == kappa.samples.len() && d.embedding.is_none() => l.comps,
        None if kappa.samples.len() == d.dim() => 1,
        _ => {
            return Err(Error::GeometryMismatch {
                profile: format!("{} ({} samples)", kappa.geometry_key, kappa.samples.len()),
                operator: format!("{} (dimension {})", d.geometry_tag.key, d.dim()),
            })
        }
    };
    let n = d.dim();
    let k = |i: usize| if constant { kappa.level_plus } else { kappa.samples[i / comps] };
    let mut matrix = d.matrix.clone();
    match grading {
        Grading::Diagonal(g) => {
            for i in 0..n {
                matrix[(i, i)] += C64::new(m * k(i) * g[i], 0.0);
            }
        }
        Grading::Dense(g) => {
            // (KΓ + ΓK)/2 equals KΓ for a site-local grading and stays Hermitian otherwise.
            for j in 0..n {
                for i in 0..n {
                    matrix[(i, j)] += g[(i, j)] * (0.5 * m * (k(i) + k(j)));
                }
            }
        }
    }
    let mut tag = d.geometry_tag.clone();
    tag.description = format!("{} + m κ Γ", tag.description);
    tag = tag.with("wall_mass", m).with("wall_profile", &kappa.kind);
    let mut out = GradedOperator::new(matrix, None, tag)?;
    out.layout = d.layout;
    out.embedding = d.embedding.clone();
    Ok(out)
}

/// The odd operator `[[0, B†], [B, 0]]` graded by `diag(1, …, 1, −1, …, −1)`,
/// where `B` maps the `+` space (its columns) to the `−` space (its rows).
pub fn chiral_from_block(b: &CMat) -> Result<GradedOperator> {
    let (nm, np) = (b.nrows(), b.ncols());
    let n = np + nm;
    let matrix = Mat::from_fn(n, n, |i, j| {
        if i >= np && j < np {
            b[(i - np, j)]
        } else if i < np && j >= np {
            b[(j - np, i)].conj()
        } else {
            ZERO
        }
    });
    let mut d = vec![1.0; np];
    d.extend(std::iter::repeat(-1.0).take(nm));
    let tag = GeometryTag::new(format!("abstract:{n}"), "chiral block operator")
        .with("n_plus", np)
        .with("n_minus", nm);
    Ok(GradedOperator::new(matrix, Some(Grading::Diagonal(d)), tag)?.with_layout(Layout { sites: n, comps: 1 }))
}

/// Random chiral operator with prescribed kernel dimensions.
///
/// `B = U diag(s) V†` with Haar-like random isometries, `rank` nonzero singular
/// values drawn from `[s_min, s_min + 2]`. The kernel then has
/// `n_plus − rank` vectors of chirality `+` and `n_minus − rank` of chirality `−`.
pub fn random_chiral<R: Rng>(rng: &mut R, n_plus: usize, n_minus: usize, rank: usize, s_min: f64) -> Result<GradedOperator> {
    if rank > n_plus.min(n_minus) {
        return Err(Error::InvalidArgument(format!("rank {rank} exceeds min({n_plus}, {n_minus})")));
    }
    let u = random_isometry(rng, n_minus, rank);
    let v = random_isometry(rng, n_plus, rank);
    let s: Vec<f64> = (0..rank).map(|_| s_min + 2.0 * rng.gen::<f64>()).collect();
    let b = Mat::from_fn(n_minus, n_plus, |i, j| (0..rank).map(|k| u[(i, k)] * s[k] * v[(j, k)].conj()).sum::<C64>());
    chiral_from_block(&b)
}

fn random_isometry<R: Rng>(rng: &mut R, n: usize, k: usize) -> CMat {
    if k == 0 {
        return linalg::zeros(n, 0);
    }
    let g = Mat::from_fn(n, k, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let q = linalg::orthonormal_range(g.as_ref(), 1e-12);
    assert_eq!(q.ncols(), k, "random Gaussian block lost rank");
    q
}
