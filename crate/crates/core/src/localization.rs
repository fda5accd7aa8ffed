//! Partitions of unity, symbol constants and the localization and excision
//! inequalities for large-mass operators `L_m = L + m h`.
//!
//! The discrete symbol of a scalar cutoff `φ` is the commutator `[L, diag(φ)]`.
//! A partition is built from a per-site distance `d`: `U₀ = {d < hi}`,
//! `U₁ = {d > lo}` and `1 − η₀ = (d − lo)/(hi − lo)` clamped to `[0, 1]`.

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Lattice1D, TorusLattice2D};
use crate::linalg::{self, CMat, C64};
use crate::operators::{assemble_wilson_line, GradedOperator};
use crate::profile::WallProfile;
use crate::spectral::eigen;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// What the partition distance is measured from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionCenter {
    /// The coordinate itself (x on a torus): `U₀` lies on the low side.
    Axis,
    /// Distance to the nearest listed point of a line.
    Walls { points: Vec<f64> },
    /// Distance in x to the nearest cut of a split torus.
    TorusCuts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub center: RegionCenter,
    pub overlap_lo: f64,
    pub overlap_hi: f64,
}

/// Sites of a line or a torus, with their nearest-neighbour structure.
#[derive(Clone, Copy, Debug)]
pub enum Sites<'a> {
    Line(&'a Lattice1D),
    Torus(&'a TorusLattice2D),
}

impl Sites<'_> {
    pub fn n_sites(&self) -> usize {
        match self {
            Sites::Line(l) => l.n_sites,
            Sites::Torus(t) => t.n_sites(),
        }
    }

    fn spacing(&self) -> f64 {
        match self {
            Sites::Line(l) => l.spacing(),
            Sites::Torus(t) => t.spacing_x(),
        }
    }

    fn neighbors(&self, s: usize) -> Vec<usize> {
        match self {
            Sites::Line(l) => {
                let n = l.n_sites;
                let periodic = l.boundary == Boundary::Periodic;
                let mut v = Vec::with_capacity(2);
                if s > 0 {
                    v.push(s - 1);
                } else if periodic {
                    v.push(n - 1);
                }
                if s + 1 < n {
                    v.push(s + 1);
                } else if periodic {
                    v.push(0);
                }
                v
            }
            Sites::Torus(t) => {
                let (ix, iy) = (s / t.n_y, s % t.n_y);
                vec![
                    t.site((ix + 1) % t.n_x, iy),
                    t.site((ix + t.n_x - 1) % t.n_x, iy),
                    t.site(ix, (iy + 1) % t.n_y),
                    t.site(ix, (iy + t.n_y - 1) % t.n_y),
                ]
            }
        }
    }

    fn distance(&self, s: usize, center: &RegionCenter) -> Result<f64> {
        Ok(match (self, center) {
            (Sites::Line(l), RegionCenter::Axis) => l.site_coords[s],
            (Sites::Torus(t), RegionCenter::Axis) => t.x_coord(s / t.n_y),
            (Sites::Line(l), RegionCenter::Walls { points }) => {
                if points.is_empty() {
                    return Err(Error::InvalidArgument("no wall points given".into()));
                }
                points.iter().map(|&p| l.displacement(l.site_coords[s], p).abs()).fold(f64::INFINITY, f64::min)
            }
            (Sites::Torus(t), RegionCenter::TorusCuts) => t.signed_wall_distance(s / t.n_y).abs(),
            _ => return Err(Error::InvalidArgument("region center does not fit the lattice".into())),
        })
    }
}

/// `S(u) = f(u)/(f(u) + f(1−u))` with `f(u) = e^{−1/u}`: smooth, 0 for `u ≤ 0`, 1 for `u ≥ 1`.
pub fn smoothstep(u: f64) -> f64 {
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        f(u) / (f(u) + f(1.0 - u))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub n_sites: usize,
    pub region_u0: Vec<usize>,
    pub region_u1: Vec<usize>,
    /// Sites strictly inside the overlap, where `0 < 1 − η₀ < 1`.
    pub overlap: Vec<usize>,
    pub eta0: Vec<f64>,
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub gamma1: Vec<f64>,
    /// Sites touching a bond across which `β₀` changes.
    pub supp_dbeta: Vec<usize>,
    /// Overlap sites together with their neighbours.
    pub dilated_overlap: Vec<usize>,
    /// Increment of `1 − η₀` per lattice step.
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionChecks {
    pub beta_unity_residual: f64,
    pub gamma_unity_residual: f64,
    /// Largest `|γ₁ − 1|` on the support of `dβ₀`.
    pub gamma_on_dbeta_residual: f64,
    /// Largest `|β₁|` where `1 − η₀ ≤ 1/2`.
    pub beta_off_residual: f64,
    /// Largest `|γ₁ − 1|` where `1 − η₀ ≥ 1/2`.
    pub gamma_on_residual: f64,
    pub passed: bool,
}

/// `γ₁ = γ(1 − η₀)` ramps on `[1/4, 1/2 − step]`, `β₁ = β(1 − η₀)` on `[1/2, 3/4]`.
///
/// The `γ` ramp stops one lattice step short of 1/2 so that `γ₁ = 1` on both
/// ends of every bond where `β₀` changes.
pub fn build_cutoffs(sites: Sites<'_>, region: &RegionSpec) -> Result<RegionPartition> {
    let (lo, hi) = (region.overlap_lo, region.overlap_hi);
    let thickness = (hi - lo) / sites.spacing();
    if !(thickness >= 8.0) {
        return Err(Error::OverlapTooThin(thickness.max(0.0).floor() as usize));
    }
    let step = 1.0 / thickness;
    let n = sites.n_sites();
    let t: Vec<f64> = (0..n)
        .map(|s| Ok(((sites.distance(s, &region.center)? - lo) / (hi - lo)).clamp(0.0, 1.0)))
        .collect::<Result<_>>()?;
    let gamma_end = 0.5 - step;
    let mut p = RegionPartition {
        n_sites: n,
        region_u0: (0..n).filter(|&s| t[s] < 1.0).collect(),
        region_u1: (0..n).filter(|&s| t[s] > 0.0).collect(),
        overlap: (0..n).filter(|&s| t[s] > 0.0 && t[s] < 1.0).collect(),
        eta0: t.iter().map(|x| 1.0 - x).collect(),
        beta0: vec![0.0; n],
        beta1: vec![0.0; n],
        gamma0: vec![0.0; n],
        gamma1: vec![0.0; n],
        supp_dbeta: Vec::new(),
        dilated_overlap: Vec::new(),
        step,
    };
    for s in 0..n {
        let g = FRAC_PI_2 * smoothstep((t[s] - 0.25) / (gamma_end - 0.25));
        let b = FRAC_PI_2 * smoothstep((t[s] - 0.5) / 0.25);
        p.gamma1[s] = if t[s] >= gamma_end { 1.0 } else { g.sin() };
        p.gamma0[s] = if t[s] >= gamma_end { 0.0 } else { g.cos() };
        p.beta1[s] = if t[s] >= 0.75 { 1.0 } else { b.sin() };
        p.beta0[s] = if t[s] >= 0.75 { 0.0 } else { b.cos() };
    }
    let mut in_supp = vec![false; n];
    let mut in_dil = vec![false; n];
    for s in 0..n {
        for q in sites.neighbors(s) {
            if p.beta0[s] != p.beta0[q] {
                in_supp[s] = true;
                in_supp[q] = true;
            }
        }
    }
    for &s in &p.overlap {
        in_dil[s] = true;
        for q in sites.neighbors(s) {
            in_dil[q] = true;
        }
    }
    p.supp_dbeta = (0..n).filter(|&s| in_supp[s]).collect();
    p.dilated_overlap = (0..n).filter(|&s| in_dil[s]).collect();
    Ok(p)
}

impl RegionPartition {
    pub fn validate(&self) -> PartitionChecks {
        let n = self.n_sites;
        let unity = |a: &[f64], b: &[f64]| (0..n).map(|s| (a[s] * a[s] + b[s] * b[s] - 1.0).abs()).fold(0.0, f64::max);
        let beta_unity_residual = unity(&self.beta0, &self.beta1);
        let gamma_unity_residual = unity(&self.gamma0, &self.gamma1);
        let gamma_on_dbeta_residual = self.supp_dbeta.iter().map(|&s| (self.gamma1[s] - 1.0).abs()).fold(0.0, f64::max);
        let beta_off_residual =
            (0..n).filter(|&s| 1.0 - self.eta0[s] <= 0.5).map(|s| self.beta1[s].abs()).fold(0.0, f64::max);
        let gamma_on_residual =
            (0..n).filter(|&s| 1.0 - self.eta0[s] >= 0.5).map(|s| (self.gamma1[s] - 1.0).abs()).fold(0.0, f64::max);
        let passed = beta_unity_residual <= 1e-12
            && gamma_unity_residual <= 1e-12
            && gamma_on_dbeta_residual <= 1e-12
            && beta_off_residual <= 1e-12
            && gamma_on_residual <= 1e-12;
        PartitionChecks {
            beta_unity_residual,
            gamma_unity_residual,
            gamma_on_dbeta_residual,
            beta_off_residual,
            gamma_on_residual,
            passed,
        }
    }
}

/// Site of each basis vector of an operator with a site layout. For a
/// compressed operator every embedded basis vector lives on a single site.
pub fn basis_sites(op: &GradedOperator) -> Result<Vec<usize>> {
    let layout = op.layout.ok_or_else(|| Error::InvalidArgument("operator has no site layout".into()))?;
    match &op.embedding {
        None => Ok((0..op.dim()).map(|i| i / layout.comps).collect()),
        Some(v) => (0..v.ncols())
            .map(|j| {
                let rows: Vec<usize> = (0..v.nrows()).filter(|&i| v[(i, j)].norm() > 0.0).collect();
                let s = rows.first().map(|&i| i / layout.comps).ok_or_else(|| Error::InvariantViolated("empty basis vector".into()))?;
                if rows.iter().any(|&i| i / layout.comps != s) {
                    return Err(Error::InvariantViolated(format!("basis vector {j} spans several sites")));
                }
                Ok(s)
            })
            .collect(),
    }
}

/// `[L, diag(φ)]` in the operator's basis.
pub fn commutator_with_scalar(l: &CMat, sites: &[usize], phi: &[f64]) -> CMat {
    Mat::from_fn(l.nrows(), l.ncols(), |i, j| l[(i, j)] * (phi[sites[j]] - phi[sites[i]]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolConstants {
    /// `‖[L,γ₀]†[L,γ₀] + [L,γ₁]†[L,γ₁]‖₂`.
    pub c1_sq: f64,
    pub c2_sq: f64,
    pub c0: f64,
    /// Largest per-site value of the same quantity restricted to the rows of one site.
    pub c1_sq_pointwise: f64,
    pub c2_sq_pointwise: f64,
}

fn pair_constants(k0: &CMat, k1: &CMat, sites: &[usize], n_sites: usize) -> Result<(f64, f64)> {
    let g = k0.adjoint() * k0 + k1.adjoint() * k1;
    let global = g
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::SolverFailure(format!("{e:?}")))?
        .into_iter()
        .fold(0.0, f64::max);
    let mut by_site: Vec<Vec<usize>> = vec![Vec::new(); n_sites];
    for (i, &s) in sites.iter().enumerate() {
        by_site[s].push(i);
    }
    let mut pointwise = 0.0f64;
    for rows in by_site.iter().filter(|r| !r.is_empty()) {
        let k = rows.len();
        let stacked = Mat::from_fn(2 * k, k0.ncols(), |r, j| if r < k { k0[(rows[r], j)] } else { k1[(rows[r - k], j)] });
        if linalg::max_abs(stacked.as_ref()) == 0.0 {
            continue;
        }
        let gram = &stacked * stacked.adjoint();
        let top = gram
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::SolverFailure(format!("{e:?}")))?
            .into_iter()
            .fold(0.0, f64::max);
        pointwise = pointwise.max(top);
    }
    Ok((global, pointwise))
}

pub fn symbol_constants(l: &GradedOperator, part: &RegionPartition) -> Result<SymbolConstants> {
    let sites = basis_sites(l)?;
    if sites.iter().any(|&s| s >= part.n_sites) {
        return Err(Error::GeometryMismatch { profile: format!("partition on {} sites", part.n_sites), operator: l.geometry_tag.key.clone() });
    }
    let tol = 1e-14 * l.norm_max().max(1.0);
    let mut allowed = vec![false; part.n_sites];
    for &s in &part.dilated_overlap {
        allowed[s] = true;
    }
    let ks: Vec<CMat> = [&part.gamma0, &part.gamma1, &part.beta0, &part.beta1]
        .iter()
        .map(|phi| commutator_with_scalar(&l.matrix, &sites, phi))
        .collect();
    let mut outside = 0;
    for k in &ks {
        for j in 0..k.ncols() {
            for i in 0..k.nrows() {
                if k[(i, j)].norm() > tol && !(allowed[sites[i]] && allowed[sites[j]]) {
                    outside += 1;
                }
            }
        }
    }
    if outside > 0 {
        return Err(Error::NonLocalStencil(outside));
    }
    // Every commutator vanishes outside the dilated overlap, so the norms can
    // be taken on that block alone.
    let idx: Vec<usize> = (0..sites.len()).filter(|&i| allowed[sites[i]]).collect();
    let sub_sites: Vec<usize> = idx.iter().map(|&i| sites[i]).collect();
    let ks: Vec<CMat> = ks.iter().map(|k| Mat::from_fn(idx.len(), idx.len(), |a, b| k[(idx[a], idx[b])])).collect();
    let (c1_sq, c1_sq_pointwise) = pair_constants(&ks[0], &ks[1], &sub_sites, part.n_sites)?;
    let (c2_sq, c2_sq_pointwise) = pair_constants(&ks[2], &ks[3], &sub_sites, part.n_sites)?;
    Ok(SymbolConstants { c1_sq, c2_sq, c0: c1_sq.max(c2_sq).sqrt(), c1_sq_pointwise, c2_sq_pointwise })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    /// Largest sitewise `|L_m(β₀Φ)|² + |L_m(β₁Φ)|² − |L_mΦ|² − |[L,β₀]Φ|² − |[L,β₁]Φ|²`.
    pub max_residual: f64,
    /// Largest sitewise `2 Re⟨L_mΦ, (Σ β_i L β_i − L)Φ⟩`, the term a lattice
    /// commutator leaves behind because `Σ β_i(x) β_i(y) ≠ 1` across a bond.
    pub max_cross_term: f64,
    /// The residual after removing that cross term; zero up to rounding.
    pub max_residual_without_cross_term: f64,
    pub phi_norm_sq: f64,
}

pub fn check_pointwise_splitting(l_m: &GradedOperator, part: &RegionPartition, phi: &[C64]) -> Result<SplittingReport> {
    let sites = basis_sites(l_m)?;
    if phi.len() != l_m.dim() {
        return Err(Error::InvalidArgument(format!("test vector has length {}, operator {}", phi.len(), l_m.dim())));
    }
    let l = l_m.matrix.as_ref();
    let scaled = |w: &[f64]| -> Vec<C64> { phi.iter().zip(&sites).map(|(z, &s)| z * w[s]).collect() };
    let lphi = linalg::mat_vec(l, phi);
    let lb0 = linalg::mat_vec(l, &scaled(&part.beta0));
    let lb1 = linalg::mat_vec(l, &scaled(&part.beta1));
    let k0 = commutator_with_scalar(&l_m.matrix, &sites, &part.beta0);
    let k1 = commutator_with_scalar(&l_m.matrix, &sites, &part.beta1);
    let k0phi = linalg::mat_vec(k0.as_ref(), phi);
    let k1phi = linalg::mat_vec(k1.as_ref(), phi);
    // (Σ β_i L β_i − L)Φ = Σ β_i [L, β_i] Φ, using Σ β_i² = 1.
    let cross_vec: Vec<C64> =
        (0..phi.len()).map(|i| k0phi[i] * part.beta0[sites[i]] + k1phi[i] * part.beta1[sites[i]]).collect();
    let mut per_site = vec![[0.0f64; 2]; part.n_sites];
    for i in 0..phi.len() {
        let r = lb0[i].norm_sqr() + lb1[i].norm_sqr() - lphi[i].norm_sqr() - k0phi[i].norm_sqr() - k1phi[i].norm_sqr();
        let c = 2.0 * (lphi[i].conj() * cross_vec[i]).re;
        per_site[sites[i]][0] += r;
        per_site[sites[i]][1] += c;
    }
    let fold = |f: &dyn Fn(&[f64; 2]) -> f64| per_site.iter().map(f).fold(0.0, f64::max);
    Ok(SplittingReport {
        max_residual: fold(&|v| v[0].abs()),
        max_cross_term: fold(&|v| v[1].abs()),
        max_residual_without_cross_term: fold(&|v| (v[0] - v[1]).abs()),
        phi_norm_sq: phi.iter().map(|z| z.norm_sqr()).sum(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeBounds {
    pub norm_sq: f64,
    pub residual_sq: f64,
    /// `(C₁² + Λ²)‖Φ‖² − m²‖γ₁Φ‖²`.
    pub weak_margin: f64,
    pub weak_holds: bool,
    /// `(Λ² + C₀²(C₀² + Λ²)/m²)‖Φ‖² − ‖L_m(β₀Φ)‖²`.
    pub comparison_margin: f64,
    pub comparison_holds: bool,
    /// `‖β₀Φ‖² − (1 − (C₀² + Λ²)/m²)‖Φ‖²`.
    pub localisation_margin: f64,
    pub localisation_holds: bool,
    /// `1 − (C₀² + Λ²)/m² ≤ 0`, so the localisation bound says nothing.
    pub localisation_vacuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: f64,
    pub lambda: f64,
    pub constants: SymbolConstants,
    pub modes: Vec<ModeBounds>,
    pub all_hold: bool,
}

/// Checks the weak-localisation, eigenvalue-comparison and
/// eigenfunction-localisation bounds for each column of `modes`.
pub fn check_localization_bounds(
    l_m: &GradedOperator,
    part: &RegionPartition,
    consts: &SymbolConstants,
    m: f64,
    lambda: f64,
    modes: &CMat,
) -> Result<BoundReport> {
    let sites = basis_sites(l_m)?;
    let l = l_m.matrix.as_ref();
    let c0_sq = consts.c0 * consts.c0;
    let lam_sq = lambda * lambda;
    let mut bad = Vec::new();
    let mut out = Vec::new();
    for j in 0..modes.ncols() {
        let phi = linalg::column(modes.as_ref(), j);
        let norm_sq: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        let lphi = linalg::mat_vec(l, &phi);
        let residual_sq: f64 = lphi.iter().map(|z| z.norm_sqr()).sum();
        if residual_sq > lam_sq * norm_sq * (1.0 + 1e-12) + 1e-24 {
            bad.push(j);
            continue;
        }
        let weighted = |w: &[f64]| -> f64 { phi.iter().zip(&sites).map(|(z, &s)| z.norm_sqr() * w[s] * w[s]).sum() };
        let gamma1_sq = weighted(&part.gamma1);
        let beta0_sq = weighted(&part.beta0);
        let b0phi: Vec<C64> = phi.iter().zip(&sites).map(|(z, &s)| z * part.beta0[s]).collect();
        let lb0: f64 = linalg::mat_vec(l, &b0phi).iter().map(|z| z.norm_sqr()).sum();
        let weak_margin = (consts.c1_sq + lam_sq) * norm_sq - m * m * gamma1_sq;
        let comparison_margin = (lam_sq + c0_sq * (c0_sq + lam_sq) / (m * m)) * norm_sq - lb0;
        let factor = 1.0 - (c0_sq + lam_sq) / (m * m);
        let localisation_margin = beta0_sq - factor * norm_sq;
        let slack = 1e-12 * norm_sq.max(1.0);
        out.push(ModeBounds {
            norm_sq,
            residual_sq,
            weak_margin,
            weak_holds: weak_margin >= -slack,
            comparison_margin,
            comparison_holds: comparison_margin >= -slack,
            localisation_margin,
            localisation_holds: localisation_margin >= -slack,
            localisation_vacuous: factor <= 0.0,
        });
    }
    if !bad.is_empty() {
        return Err(Error::PreconditionViolated(bad));
    }
    let all_hold = out.iter().all(|b| b.weak_holds && b.comparison_holds && b.localisation_holds);
    Ok(BoundReport { m, lambda, constants: consts.clone(), modes: out, all_hold })
}

/// One side of an excision comparison: `L_m = L + m h` on a lattice.
#[derive(Clone, Debug)]
pub struct ExcisionSide {
    pub op: GradedOperator,
    /// The potential `h`, block diagonal by site in the operator's basis.
    pub h: CMat,
    /// The first-order part of `L` that `h` must anticommute with on `U₁`.
    pub principal: CMat,
    pub partition: RegionPartition,
}

#[derive(Clone, Debug)]
pub struct ExcisionInstance {
    pub side: ExcisionSide,
    pub side_p: ExcisionSide,
    /// Site bijection `U₀ → U₀′`.
    pub shared_map: Vec<(usize, usize)>,
    pub m: f64,
    /// `(Λ₀, Λ₁, Λ₂)`; when absent, `Λ₀ = 0`, `Λ₂` just below the smallest
    /// nonzero `|λ|` of `L_m` and `Λ₁ = Λ₂/√2`.
    pub lambdas: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceChecks {
    /// Largest entry difference of the operators on blocks inside the shared region.
    pub agreement_residual: f64,
    pub h_sq_min: [f64; 2],
    pub anticommutation_residual: [f64; 2],
    /// Lattice-end sites left out of the `U₁` checks on each side.
    pub truncation_sites: [Vec<usize>; 2],
    pub violations: Vec<String>,
}

/// `(min eig h², anticommutator residual, truncation sites skipped)` over `U₁`.
///
/// Sites whose basis was cut down by end conditions belong to the
/// truncation of the lattice rather than to the geometry, and are skipped.
fn side_checks(side: &ExcisionSide, sites: &[usize], comps: usize) -> Result<(f64, f64, Vec<usize>)> {
    let mut by_site: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &s) in sites.iter().enumerate() {
        by_site.entry(s).or_default().push(i);
    }
    let truncated: Vec<usize> = by_site.iter().filter(|(_, v)| v.len() != comps).map(|(&s, _)| s).collect();
    let mut in_u1 = vec![false; side.partition.n_sites];
    for &s in &side.partition.region_u1 {
        in_u1[s] = true;
    }
    for &s in &truncated {
        in_u1[s] = false;
    }
    let idx: Vec<usize> = (0..sites.len()).filter(|&i| in_u1[sites[i]]).collect();
    let mut h_min = f64::INFINITY;
    for rows in by_site.iter().filter(|(s, _)| in_u1[**s]).map(|(_, v)| v) {
        let blk = Mat::from_fn(rows.len(), rows.len(), |a, b| side.h[(rows[a], rows[b])]);
        let sq = &blk * &blk;
        let ev = sq.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        h_min = ev.into_iter().fold(h_min, f64::min);
    }
    let sub = Mat::from_fn(idx.len(), idx.len(), |a, b| side.principal[(idx[a], idx[b])]);
    let hs = Mat::from_fn(idx.len(), idx.len(), |a, b| side.h[(idx[a], idx[b])]);
    let anti = &hs * &sub + &sub * &hs;
    Ok((h_min, linalg::max_abs(anti.as_ref()), truncated))
}

impl ExcisionInstance {
    pub fn validate(&self) -> Result<InstanceChecks> {
        let s0 = basis_sites(&self.side.op)?;
        let s1 = basis_sites(&self.side_p.op)?;
        let mut violations = Vec::new();
        // Basis vectors of each shared site, in order; the map must pair them one to one.
        let group = |sites: &[usize]| {
            let mut g: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            for (i, &s) in sites.iter().enumerate() {
                g.entry(s).or_default().push(i);
            }
            g
        };
        let (g0, g1) = (group(&s0), group(&s1));
        let mut pairs = Vec::new();
        for &(a, b) in &self.shared_map {
            let (va, vb) = (g0.get(&a).cloned().unwrap_or_default(), g1.get(&b).cloned().unwrap_or_default());
            if va.len() != vb.len() || va.is_empty() {
                violations.push(format!("site {a} ↦ {b} carries {} vs {} basis vectors", va.len(), vb.len()));
                continue;
            }
            pairs.extend(va.into_iter().zip(vb));
        }
        let mut agreement = 0.0f64;
        for &(i, ip) in &pairs {
            for &(j, jp) in &pairs {
                agreement = agreement.max((self.side.op.matrix[(i, j)] - self.side_p.op.matrix[(ip, jp)]).norm());
            }
        }
        if agreement > 1e-12 {
            violations.push(format!("operators differ on the shared region by {agreement:e}"));
        }
        let comps = |op: &GradedOperator| op.layout.map_or(1, |l| l.comps);
        let (h0, a0, t0) = side_checks(&self.side, &s0, comps(&self.side.op))?;
        let (h1, a1, t1) = side_checks(&self.side_p, &s1, comps(&self.side_p.op))?;
        for (name, h, a) in [("Z", h0, a0), ("Z′", h1, a1)] {
            if h < 1.0 - 1e-12 {
                violations.push(format!("{name}: h² has eigenvalue {h} < 1 on U₁"));
            }
            if a > 1e-10 {
                violations.push(format!("{name}: h fails to anticommute with the principal part on U₁ ({a:e})"));
            }
        }
        for (name, side) in [("Z", &self.side), ("Z′", &self.side_p)] {
            let c = side.partition.validate();
            if !c.passed {
                violations.push(format!("{name}: partition invariants fail ({c:?})"));
            }
        }
        Ok(InstanceChecks {
            agreement_residual: agreement,
            h_sq_min: [h0, h1],
            anticommutation_residual: [a0, a1],
            truncation_sites: [t0, t1],
            violations,
        })
    }
}

/// `max{(C²+Λ₂²)(C²+Λ₁²)/(Λ₂²−Λ₁²), (C²+Λ₁²)(C²+Λ₀²)/(Λ₁²−Λ₀²), C²+Λ₂²}`.
pub fn heavy_mass_bound(c_sq: f64, lambdas: [f64; 3]) -> f64 {
    let [l0, l1, l2] = lambdas.map(|l| l * l);
    ((c_sq + l2) * (c_sq + l1) / (l2 - l1)).max((c_sq + l1) * (c_sq + l0) / (l1 - l0)).max(c_sq + l2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub count_l_in_lambda0: usize,
    pub count_lp_in_lambda1: usize,
    pub equal: bool,
    pub gap_certified: bool,
    pub mass_certified: bool,
    pub lambdas: [f64; 3],
    pub m: f64,
    pub c_sq: f64,
    pub mass_bound: f64,
    pub constants: [SymbolConstants; 2],
    pub checks: InstanceChecks,
    /// Every hypothesis holds: gap, mass bound and the instance invariants.
    pub hypotheses_met: bool,
    pub eigenvalues_l_near_zero: Vec<f64>,
    pub eigenvalues_lp_in_window: Vec<f64>,
}

pub fn excision_count_compare(inst: &ExcisionInstance) -> Result<CountReport> {
    let checks = inst.validate()?;
    let spec = eigen(&inst.side.op, false, None)?;
    let eps0 = spec.zero_threshold;
    let lambdas = match inst.lambdas {
        Some(l) => l,
        None => {
            let gap = spec.eigenvalues.iter().map(|l| l.abs()).filter(|&l| l > eps0).fold(f64::INFINITY, f64::min);
            let l2 = gap * (1.0 - 1e-6);
            [0.0, l2 / 2f64.sqrt(), l2]
        }
    };
    let [l0, l1, l2] = lambdas;
    if !(l0 >= 0.0 && l0 < l1 && l1 < l2) {
        return Err(Error::InvalidArgument(format!("need 0 ≤ Λ₀ < Λ₁ < Λ₂, got {lambdas:?}")));
    }
    // Λ₀ = 0 counts the numerical kernel.
    let lo = l0.max(eps0);
    let in_gap: Vec<f64> = spec.eigenvalues.iter().copied().filter(|l| l.abs() > lo && l.abs() <= l2).collect();
    if !in_gap.is_empty() {
        return Err(Error::GapNotSatisfied(in_gap));
    }
    let k0 = symbol_constants(&inst.side.op, &inst.side.partition)?;
    let k1 = symbol_constants(&inst.side_p.op, &inst.side_p.partition)?;
    let c_sq = k0.c0.max(k1.c0).powi(2);
    let bound = heavy_mass_bound(c_sq, lambdas);
    if inst.m * inst.m <= bound {
        return Err(Error::MassTooSmall { m_sq: inst.m * inst.m, bound });
    }
    let count0: Vec<f64> = spec.eigenvalues.iter().copied().filter(|l| l.abs() <= lo).collect();
    let spec_p = eigen(&inst.side_p.op, false, None)?;
    let window: Vec<f64> = spec_p.eigenvalues.iter().copied().filter(|l| l.abs() <= l1).collect();
    Ok(CountReport {
        count_l_in_lambda0: count0.len(),
        count_lp_in_lambda1: window.len(),
        equal: count0.len() == window.len(),
        gap_certified: true,
        mass_certified: true,
        lambdas,
        m: inst.m,
        c_sq,
        mass_bound: bound,
        constants: [k0, k1],
        hypotheses_met: checks.violations.is_empty(),
        checks,
        eigenvalues_l_near_zero: count0,
        eigenvalues_lp_in_window: window,
    })
}

/// The Jackiw-Rebbi line `c∇ + ε(W + mκ)` as an excision side, with
/// `h = κε` and principal part `c∇`, both compressed like the operator.
pub fn jackiw_rebbi_side(lat: &Lattice1D, m: f64, profile: &WallProfile, region: &RegionSpec) -> Result<ExcisionSide> {
    let op = crate::operators::build_jackiw_rebbi_line(lat, m, profile)?;
    let n = lat.n_sites;
    let kappa = &profile.samples;
    let h_full = Mat::from_fn(2 * n, 2 * n, |i, j| {
        if i / 2 == j / 2 && i != j {
            C64::new(kappa[i / 2], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let zero = Mat::<C64>::zeros(1, 1);
    let principal_full = assemble_wilson_line(lat, 1, 0.0, &|_| zero.clone(), &|_| None);
    let (h, principal) = match &op.embedding {
        Some(v) => {
            let v: &CMat = v;
            (v.adjoint() * &h_full * v, v.adjoint() * &principal_full * v)
        }
        None => (h_full, principal_full),
    };
    let partition = build_cutoffs(Sites::Line(lat), region)?;
    Ok(ExcisionSide { op, h, principal, partition })
}
