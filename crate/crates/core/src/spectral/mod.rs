//! Eigendecomposition facade and the spectral functionals built on it.

mod lanczos;

pub use lanczos::lowest_k;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Lattice1D, TorusLattice2D};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::operators::{apply_domain_wall, GradedOperator, Grading, Layout};
use crate::profile::WallProfile;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Eigenvalues (ascending) with optional eigenvectors and the zero threshold.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<CMat>,
    pub zero_threshold: f64,
    pub ambiguous_band: Vec<f64>,
    /// Dimension of the decomposed matrix.
    pub dim: usize,
    /// Whether every eigenvalue was computed.
    pub complete: bool,
    pub max_residual: f64,
    pub layout: Option<Layout>,
    pub embedding: Option<Arc<CMat>>,
}

/// Default zero threshold `1e-8 · max(1, ‖H‖)`.
pub fn default_threshold(norm: f64) -> f64 {
    1e-8 * norm.max(1.0)
}

/// Upper bound on the spectral norm from the largest absolute row sum.
fn row_sum_norm(h: &CMat) -> f64 {
    (0..h.nrows())
        .map(|i| (0..h.ncols()).map(|j| h[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Rotates each column so that its largest entry is real and positive. Ties
/// within a relative 1e-9 go to the lowest row.
fn fix_phases(v: &mut CMat) {
    for j in 0..v.ncols() {
        let mut best = 0.0;
        let mut arg = 0;
        for i in 0..v.nrows() {
            let a = v[(i, j)].norm();
            if a > best * (1.0 + 1e-9) {
                best = a;
                arg = i;
            }
        }
        if best == 0.0 {
            continue;
        }
        let ph = v[(arg, j)].conj() / best;
        for i in 0..v.nrows() {
            v[(i, j)] *= ph;
        }
    }
}

fn finish(
    h: &GradedOperator,
    eigenvalues: Vec<f64>,
    eigenvectors: Option<CMat>,
    norm: f64,
    complete: bool,
    max_residual: f64,
) -> SpectralData {
    let eps0 = default_threshold(norm);
    let ambiguous_band = eigenvalues.iter().copied().filter(|l| l.abs() >= eps0 && l.abs() <= 10.0 * eps0).collect();
    SpectralData {
        eigenvalues,
        eigenvectors,
        zero_threshold: eps0,
        ambiguous_band,
        dim: h.dim(),
        complete,
        max_residual,
        layout: h.layout,
        embedding: h.embedding.clone(),
    }
}

/// Full decomposition, or the `k` eigenpairs nearest zero when `k_lowest` is set.
pub fn eigen(h: &GradedOperator, want_vectors: bool, k_lowest: Option<usize>) -> Result<SpectralData> {
    let herm = h.hermiticity_residual();
    let scale = h.norm_max();
    if herm > 1e-12 * (1.0 + scale) {
        return Err(Error::InvariantViolated(format!("hermiticity residual {herm:e}")));
    }
    let m = &h.matrix;
    let n = h.dim();
    if let Some(k) = k_lowest {
        let norm = row_sum_norm(m);
        let tol = 1e-8 * norm.max(1e-300);
        let (vals, mut vecs) = lowest_k(m, k, norm, tol)?;
        fix_phases(&mut vecs);
        let res = residuals(m, &vals, &vecs);
        return Ok(finish(h, vals, want_vectors.then_some(vecs), norm, false, res));
    }
    if !want_vectors {
        let vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        let norm = vals.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        return Ok(finish(h, vals, None, norm, true, 0.0));
    }
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let vals: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let mut vecs = e.U().to_owned();
    fix_phases(&mut vecs);
    let norm = vals.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let res = residuals(m, &vals, &vecs);
    if res > 1e-8 * norm.max(1e-300) {
        return Err(Error::SolverFailure(format!("eigenpair residual {res:e} exceeds 1e-8·‖H‖ = {:e}", 1e-8 * norm)));
    }
    Ok(finish(h, vals, Some(vecs), norm, true, res))
}

/// Largest `‖Hv − λv‖` over the supplied pairs.
fn residuals(h: &CMat, vals: &[f64], vecs: &CMat) -> f64 {
    let hv = h * vecs;
    let mut worst = 0.0f64;
    for (j, &l) in vals.iter().enumerate() {
        let r = (0..h.nrows()).map(|i| (hv[(i, j)] - vecs[(i, j)] * l).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub value: i64,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_zero: usize,
    pub threshold_used: f64,
    /// Eigenvalues in the decade `[ε₀, 10ε₀]`, counted as nonzero but flagged.
    pub ambiguous: Vec<f64>,
}

/// Sign-sum of the spectrum, with `|λ| ≤ ε₀` counted as zero.
pub fn eta_sign_sum(spec: &SpectralData, allow_zero: bool) -> Result<EtaResult> {
    if !spec.complete {
        return Err(Error::InvalidArgument("eta needs the complete spectrum".into()));
    }
    let eps0 = spec.zero_threshold;
    let n_zero = spec.eigenvalues.iter().filter(|l| l.abs() <= eps0).count();
    let n_positive = spec.eigenvalues.iter().filter(|&&l| l > eps0).count();
    let n_negative = spec.eigenvalues.iter().filter(|&&l| l < -eps0).count();
    if !allow_zero && n_zero > 0 {
        return Err(Error::ZeroModePresent { n_zero, threshold: eps0 });
    }
    if !spec.ambiguous_band.is_empty() {
        log::warn!("{} eigenvalue(s) in the ambiguous band [{eps0:e}, {:e}]", spec.ambiguous_band.len(), 10.0 * eps0);
    }
    let value = n_positive as i64 - n_negative as i64;
    debug_assert_eq!((value - (spec.dim - n_zero) as i64).rem_euclid(2), 0);
    Ok(EtaResult { value, n_positive, n_negative, n_zero, threshold_used: eps0, ambiguous: spec.ambiguous_band.clone() })
}

/// How an index was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum IndexPath {
    /// Chirality trace on the numerical kernel of an odd operator.
    Kernel,
    /// Chirality trace on the kernel of the overlap operator
    /// `1 + Γ sign(D − mΓ)` built from a non-odd `D`.
    Overlap { mass: f64 },
    /// Chirality trace on the kernel of an APS-constrained operator.
    Constrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub index: i64,
    pub dim_ker_plus: usize,
    pub dim_ker_minus: usize,
    pub chirality_trace: f64,
    pub residual: f64,
    pub threshold: f64,
    pub path: IndexPath,
}

/// Splits a kernel basis (columns of `k`) by chirality.
pub(crate) fn kernel_chirality(k: &CMat, grading: &Grading, threshold: f64, path: IndexPath) -> Result<IndexResult> {
    let dim = k.ncols();
    let gk: Vec<Vec<C64>> = (0..dim).map(|j| grading.apply(&linalg::column(k.as_ref(), j))).collect();
    let proj = Mat::from_fn(dim, dim, |i, j| linalg::dot(&linalg::column(k.as_ref(), i), &gk[j]));
    let trace: f64 = (0..dim).map(|i| proj[(i, i)].re).sum();
    let (plus, minus) = if dim == 0 {
        (0, 0)
    } else {
        let ev = proj.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        (ev.iter().filter(|&&x| x > 0.0).count(), ev.iter().filter(|&&x| x <= 0.0).count())
    };
    let rounded = trace.round();
    if (trace - rounded).abs() > 0.01 {
        return Err(Error::NonIntegerTrace(trace));
    }
    let index = plus as i64 - minus as i64;
    if index as f64 != rounded {
        return Err(Error::NonIntegerTrace(trace));
    }
    Ok(IndexResult {
        index,
        dim_ker_plus: plus,
        dim_ker_minus: minus,
        chirality_trace: trace,
        residual: (trace - index as f64).abs(),
        threshold,
        path,
    })
}

fn kernel_columns(spec: &SpectralData, eps0: f64) -> CMat {
    let v = spec.eigenvectors.as_ref().expect("eigenvectors requested");
    let cols: Vec<usize> = (0..spec.eigenvalues.len()).filter(|&i| spec.eigenvalues[i].abs() <= eps0).collect();
    Mat::from_fn(v.nrows(), cols.len(), |i, j| v[(i, cols[j])])
}

/// Chirality index of a graded operator.
///
/// Odd operators use the trace of `Γ` on the eigenvectors with `|λ| ≤ ε₀`.
/// Graded operators that are not odd (the Wilson torus) use the overlap
/// operator `D_ov = 1 + Γ sign(D − mΓ)` at the operator's index mass, whose
/// kernel consists of exact chirality eigenvectors; `ε₀` then applies to the
/// spectrum of `D_ov† D_ov`.
pub fn chiral_index(d: &GradedOperator, eps0: Option<f64>) -> Result<IndexResult> {
    let grading = d.grading.as_ref().ok_or(Error::MissingGrading)?;
    if d.chiral_flag {
        let spec = eigen(d, true, None)?;
        let eps = eps0.unwrap_or(spec.zero_threshold);
        return kernel_chirality(&kernel_columns(&spec, eps), grading, eps, IndexPath::Kernel);
    }
    let m = d.index_mass.ok_or(Error::NotChiral)?;
    let n = d.dim();
    let g = grading.to_matrix();
    let shifted = GradedOperator::new(linalg::sub(d.matrix.as_ref(), (&g * faer::Scale(C64::new(m, 0.0))).as_ref()), None, d.geometry_tag.clone())?;
    let spec = eigen(&shifted, true, None)?;
    let zeros = spec.eigenvalues.iter().filter(|l| l.abs() <= spec.zero_threshold).count();
    if zeros > 0 {
        return Err(Error::ZeroModePresent { n_zero: zeros, threshold: spec.zero_threshold });
    }
    let v = spec.eigenvectors.as_ref().expect("vectors");
    let sv = Mat::from_fn(n, n, |i, j| v[(i, j)] * spec.eigenvalues[j].signum());
    let sign = &sv * v.adjoint();
    let gs = &g * &sign;
    let k = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { C64::new(2.0, 0.0) } else { ZERO };
        id + gs[(i, j)] + gs[(j, i)].conj()
    });
    let kop = GradedOperator::new(k, None, d.geometry_tag.clone())?;
    let kspec = eigen(&kop, true, None)?;
    let eps = eps0.unwrap_or(kspec.zero_threshold);
    kernel_chirality(&kernel_columns(&kspec, eps), grading, eps, IndexPath::Overlap { mass: m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub interval: (f64, f64),
    pub eigenvalues_inside: Vec<f64>,
    pub gap_holds: bool,
    /// The eigenvalue outside the interval closest to it, if any.
    pub nearest_outside: Option<f64>,
}

pub fn spectral_gap_check(spec: &SpectralData, lo: f64, hi: f64, whitelist_zero: bool) -> Result<GapReport> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty interval ({lo}, {hi})")));
    }
    let inside: Vec<f64> = spec.eigenvalues.iter().copied().filter(|&l| l > lo && l < hi).collect();
    let gap_holds = inside.iter().all(|l| whitelist_zero && l.abs() <= spec.zero_threshold);
    let nearest_outside = spec
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l <= lo || l >= hi)
        .min_by(|a, b| {
            let da = if *a <= lo { lo - a } else { a - hi };
            let db = if *b <= lo { lo - b } else { b - hi };
            da.total_cmp(&db)
        });
    Ok(GapReport { interval: (lo, hi), eigenvalues_inside: inside, gap_holds, nearest_outside })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsEtaReport {
    pub lhs: i64,
    pub eta_plus: EtaResult,
    pub eta_minus: EtaResult,
    /// `η(D+mΓ) − η(D−mΓ)`; the right-hand side is half of it.
    pub rhs_twice: i64,
    pub rhs: f64,
    pub equal: bool,
    pub index: IndexResult,
}

/// Compares the chirality index with `(η(D+mΓ) − η(D−mΓ))/2`.
pub fn as_eta_identity_check(d: &GradedOperator, m: f64) -> Result<AsEtaReport> {
    if !d.chiral_flag {
        return Err(Error::NotChiral);
    }
    let index = chiral_index(d, None)?;
    let plus = WallProfile::constant(&d.geometry_tag.key, d.dim(), 1.0);
    let minus = WallProfile::constant(&d.geometry_tag.key, d.dim(), -1.0);
    let eta_plus = eta_sign_sum(&eigen(&apply_domain_wall(d, m, &plus)?, false, None)?, false)?;
    let eta_minus = eta_sign_sum(&eigen(&apply_domain_wall(d, m, &minus)?, false, None)?, false)?;
    let rhs_twice = eta_plus.value - eta_minus.value;
    Ok(AsEtaReport {
        lhs: index.index,
        rhs: rhs_twice as f64 / 2.0,
        equal: rhs_twice == 2 * index.index,
        rhs_twice,
        eta_plus,
        eta_minus,
        index,
    })
}

/// The geometry over which a mode profile is reported.
#[derive(Clone, Copy, Debug)]
pub enum SiteGeometry<'a> {
    Line(&'a Lattice1D),
    /// Marginalized over y, reported per x column.
    Torus(&'a TorusLattice2D),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationProfile {
    pub coords: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub peak_coord: f64,
    pub fitted_decay_rate: f64,
    pub fit_r2: f64,
    pub fit_points: usize,
    /// The amplitude varies by less than a factor e across the fit window.
    pub near_uniform: bool,
}

/// Per-site `|ψ|²` summed over components, in the uncompressed site basis.
pub fn site_amplitude(spec: &SpectralData, which: usize) -> Result<Vec<f64>> {
    let v = spec.eigenvectors.as_ref().ok_or_else(|| Error::InvalidArgument("eigenvectors required".into()))?;
    if which >= v.ncols() {
        return Err(Error::InvalidArgument(format!("mode {which} out of range")));
    }
    let layout = spec.layout.ok_or_else(|| Error::InvalidArgument("operator has no site layout".into()))?;
    let col = linalg::column(v.as_ref(), which);
    let full = match &spec.embedding {
        Some(e) => linalg::mat_vec(e.as_ref().as_ref(), &col),
        None => col,
    };
    Ok((0..layout.sites)
        .map(|s| (0..layout.comps).map(|c| full[s * layout.comps + c].norm_sqr()).sum())
        .collect())
}

/// Exponential fit of the mode profile around its peak.
///
/// On each side of the peak the fit uses sites between 10% and 60% of the
/// distance to the lattice end (half the circumference on a periodic
/// direction) and above a relative floor of 1e-24. The slope of
/// `ln |ψ|²` against distance is `−2κ`; `κ` is reported.
pub fn mode_localization(spec: &SpectralData, which: usize, geometry: SiteGeometry<'_>) -> Result<LocalizationProfile> {
    let amp = site_amplitude(spec, which)?;
    let (coords, amplitude, periodic, extent) = match geometry {
        SiteGeometry::Line(lat) => (lat.site_coords.clone(), amp, lat.boundary == Boundary::Periodic, lat.extent),
        SiteGeometry::Torus(lat) => {
            let per_x: Vec<f64> = (0..lat.n_x).map(|ix| (0..lat.n_y).map(|iy| amp[lat.site(ix, iy)]).sum()).collect();
            ((0..lat.n_x).map(|ix| lat.x_coord(ix)).collect(), per_x, true, lat.extent_x)
        }
    };
    if coords.len() != amplitude.len() {
        return Err(Error::GeometryMismatch { profile: "mode".into(), operator: "geometry".into() });
    }
    let p = (0..amplitude.len()).fold(0, |b, i| if amplitude[i] > amplitude[b] { i } else { b });
    let peak = amplitude[p];
    let x0 = coords[p];
    let (left_win, right_win) = if periodic {
        (extent / 2.0, extent / 2.0)
    } else {
        (x0 - coords[0], coords[coords.len() - 1] - x0)
    };
    let mut pts = Vec::new();
    let mut lo_amp = f64::INFINITY;
    let mut hi_amp: f64 = 0.0;
    for (i, (&x, &a)) in coords.iter().zip(&amplitude).enumerate() {
        if i == p {
            continue;
        }
        let mut dx = x - x0;
        if periodic {
            dx -= extent * (dx / extent).round();
        }
        let win = if dx < 0.0 { left_win } else { right_win };
        let d = dx.abs();
        if d >= 0.1 * win && d <= 0.6 * win && a > 1e-24 * peak {
            pts.push((d, a.ln()));
            lo_amp = lo_amp.min(a);
            hi_amp = hi_amp.max(a);
        }
    }
    let near_uniform = pts.is_empty() || hi_amp / lo_amp < std::f64::consts::E;
    if pts.len() < 3 {
        return Err(Error::FitUnstable(0.0));
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let syy = pts.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    let slope = sxy / sxx;
    let ss_res = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 0.0 };
    if r2 < 0.9 {
        return Err(Error::FitUnstable(r2));
    }
    Ok(LocalizationProfile {
        coords,
        amplitude,
        peak_coord: x0,
        fitted_decay_rate: -slope / 2.0,
        fit_r2: r2,
        fit_points: pts.len(),
        near_uniform,
    })
}
