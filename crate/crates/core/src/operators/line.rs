//! One-dimensional Wilson-type assembly shared by the Jackiw-Rebbi line and the
//! cylinder extension.
//!
//! The line operator is `c ⊗ ∇ + ε ⊗ (r W + M(s))`, where `∇` is the symmetric
//! difference, `W = (2 − T − T†)/(2a)` the Wilson term and `M(s)` a Hermitian
//! mass block per site. Both `c` and `ε` anticommute with `Γ`, so the result is
//! exactly odd, and the Wilson term along `ε` removes the doubler.

use super::{GeometryTag, Grading, GradedOperator, Layout};
use crate::clifford::{C, EPS};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Lattice1D};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::profile::WallProfile;
use faer::{Mat, Side};

/// Basis index of component `(site, k, σ)` for internal dimension `d`.
#[inline]
fn idx(site: usize, k: usize, sigma: usize, d: usize) -> usize {
    (site * d + k) * 2 + sigma
}

/// Assembles the line operator. `mass(site)` returns the `d × d` block `M`;
/// `link(bond)` optionally returns diagonal phases for the bond `site → site+1`.
pub fn assemble_wilson_line(
    lat: &Lattice1D,
    d: usize,
    r: f64,
    mass: &dyn Fn(usize) -> CMat,
    link: &dyn Fn(usize) -> Option<Vec<C64>>,
) -> CMat {
    let n = lat.n_sites;
    let a = lat.spacing();
    let dim = 2 * n * d;
    let mut h: CMat = Mat::zeros(dim, dim);
    // Hopping block (c − r ε)/(2a) on the bond s → s+1.
    let hop = [[C[0][0] - r * EPS[0][0], C[0][1] - r * EPS[0][1]], [C[1][0] - r * EPS[1][0], C[1][1] - r * EPS[1][1]]];
    for s in 0..n {
        let m = mass(s);
        for k in 0..d {
            for kp in 0..d {
                let v = m[(k, kp)] + if k == kp { C64::new(r / a, 0.0) } else { ZERO };
                h[(idx(s, k, 0, d), idx(s, kp, 1, d))] += v;
                h[(idx(s, k, 1, d), idx(s, kp, 0, d))] += v;
            }
        }
        let t = if s + 1 < n {
            s + 1
        } else if lat.boundary == Boundary::Periodic {
            0
        } else {
            continue;
        };
        let phases = link(s);
        for k in 0..d {
            let u = phases.as_ref().map_or(ONE, |p| p[k]);
            for si in 0..2 {
                for sj in 0..2 {
                    if hop[si][sj] == 0.0 {
                        continue;
                    }
                    let v = u * (hop[si][sj] / (2.0 * a));
                    h[(idx(s, k, si, d), idx(t, k, sj, d))] += v;
                    h[(idx(t, k, sj, d), idx(s, k, si, d))] += v.conj();
                }
            }
        }
    }
    h
}

/// Basis of the subspace left after imposing the end conditions, with the
/// chirality label of each basis vector.
#[derive(Clone, Debug)]
pub struct EndCompression {
    columns: Vec<Vec<(usize, C64)>>,
    pub labels: Vec<f64>,
    pub full_dim: usize,
    pub removed: usize,
}

impl EndCompression {
    pub fn kept(&self) -> usize {
        self.columns.len()
    }

    /// Dense isometry `V` with the kept basis as columns.
    pub fn basis(&self) -> CMat {
        let mut v = Mat::zeros(self.full_dim, self.kept());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, z) in col {
                v[(i, j)] = z;
            }
        }
        v
    }

    /// `V† H V`, computed column by column without forming `V`.
    pub fn compress(&self, h: &CMat) -> CMat {
        let n = self.full_dim;
        let k = self.kept();
        let mut hv: CMat = Mat::zeros(n, k);
        for (j, col) in self.columns.iter().enumerate() {
            for &(c, z) in col {
                for i in 0..n {
                    hv[(i, j)] += h[(i, c)] * z;
                }
            }
        }
        let mut out: CMat = Mat::zeros(k, k);
        for j in 0..k {
            for (i, row) in self.columns.iter().enumerate() {
                out[(i, j)] = row.iter().map(|&(r, z)| z.conj() * hv[(r, j)]).sum();
            }
        }
        // Restore exact Hermitian symmetry lost to rounding in the two products.
        for j in 0..k {
            for i in 0..j {
                let v = 0.5 * (out[(i, j)] + out[(j, i)].conj());
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
            out[(j, j)] = C64::new(out[(j, j)].re, 0.0);
        }
        out
    }
}

fn nonnegative_eigvecs(m: &CMat) -> (Vec<Vec<C64>>, usize) {
    let d = m.nrows();
    let scale = linalg::max_abs(m.as_ref()).max(1.0);
    let e = m.self_adjoint_eigen(Side::Lower).expect("eigendecomposition of a small mass block");
    let s = e.S().column_vector();
    let u = e.U();
    let mut keep = Vec::new();
    let mut removed = 0;
    for j in 0..d {
        if s[j].re < -1e-12 * scale {
            removed += 1;
        } else {
            keep.push((0..d).map(|i| u[(i, j)]).collect());
        }
    }
    (keep, removed)
}

/// End conditions for a truncated line: at the first site the `σ = +`
/// components along negative directions of `m_left` are removed, at the last
/// site the `σ = −` components along negative directions of `m_right`.
///
/// These are the local boundary conditions under which the truncation carries
/// no spurious edge states: an end with negative mass would otherwise bind a
/// mode of the removed chirality.
pub fn chiral_end_compression(n_sites: usize, d: usize, m_left: &CMat, m_right: &CMat) -> EndCompression {
    let full_dim = 2 * n_sites * d;
    let (left, rl) = nonnegative_eigvecs(m_left);
    let (right, rr) = nonnegative_eigvecs(m_right);
    let mut columns = Vec::with_capacity(full_dim);
    let mut labels = Vec::with_capacity(full_dim);
    for s in 0..n_sites {
        for sigma in 0..2 {
            let label = if sigma == 0 { 1.0 } else { -1.0 };
            let restricted = if s == 0 && sigma == 0 && rl > 0 {
                Some(&left)
            } else if s == n_sites - 1 && sigma == 1 && rr > 0 {
                Some(&right)
            } else {
                None
            };
            match restricted {
                Some(vecs) => {
                    for v in vecs {
                        columns.push((0..d).map(|k| (idx(s, k, sigma, d), v[k])).collect());
                        labels.push(label);
                    }
                }
                None => {
                    for k in 0..d {
                        columns.push(vec![(idx(s, k, sigma, d), ONE)]);
                        labels.push(label);
                    }
                }
            }
        }
    }
    // Keep site-major, spinor-minor order among unit vectors.
    EndCompression { columns, labels, full_dim, removed: rl + rr }
}

fn sigma_grading(n_sites: usize, d: usize) -> Vec<f64> {
    (0..2 * n_sites * d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// `c∂_t + m κ(t) ε` on two-component spinors.
///
/// On a Dirichlet lattice the end conditions of [`chiral_end_compression`]
/// are applied, so a single wall carries exactly one zero mode.
pub fn build_jackiw_rebbi_line(lat: &Lattice1D, m: f64, profile: &WallProfile) -> Result<GradedOperator> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {m}")));
    }
    if profile.geometry_key != lat.geometry_key() || profile.samples.len() != lat.n_sites {
        return Err(Error::GeometryMismatch { profile: profile.geometry_key.clone(), operator: lat.geometry_key() });
    }
    if lat.boundary == Boundary::Periodic {
        let changes = profile.sign_changes(true);
        if changes % 2 == 1 {
            return Err(Error::OddWallCountOnCircle(changes));
        }
    }
    let kappa = &profile.samples;
    let mass = |s: usize| Mat::from_fn(1, 1, |_, _| C64::new(m * kappa[s], 0.0));
    let h = assemble_wilson_line(lat, 1, 1.0, &mass, &|_| None);
    let tag = GeometryTag::new(lat.geometry_key(), "Jackiw-Rebbi line")
        .with("m", m)
        .with("profile", &profile.kind)
        .with("walls", &profile.wall_positions);
    let layout = Layout { sites: lat.n_sites, comps: 2 };
    if lat.boundary == Boundary::Dirichlet {
        let ends = chiral_end_compression(lat.n_sites, 1, &mass(0), &mass(lat.n_sites - 1));
        if ends.removed > 0 {
            let hc = ends.compress(&h);
            let op = GradedOperator::new(hc, Some(Grading::Diagonal(ends.labels.clone())), tag)?;
            return Ok(op.with_layout(layout).with_embedding(ends.basis()));
        }
    }
    Ok(GradedOperator::new(h, Some(Grading::Diagonal(sigma_grading(lat.n_sites, 1))), tag)?.with_layout(layout))
}

/// `ε ⊗ (D + m κ̂(s) Γ) + c ⊗ ∂_s` on a truncated s-line, s outermost, graded by
/// the chirality of the new spinor factor.
pub fn build_cylinder_extension(
    d: &GradedOperator,
    m: f64,
    s_profile: &WallProfile,
    lat_s: &Lattice1D,
) -> Result<GradedOperator> {
    let gamma = d.grading_matrix()?;
    if lat_s.boundary != Boundary::Dirichlet {
        return Err(Error::InvalidArgument("the s-lattice must be a truncated (Dirichlet) line".into()));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {m}")));
    }
    if s_profile.geometry_key != lat_s.geometry_key() || s_profile.samples.len() != lat_s.n_sites {
        return Err(Error::GeometryMismatch { profile: s_profile.geometry_key.clone(), operator: lat_s.geometry_key() });
    }
    let n = lat_s.n_sites;
    let edge = (n + 9) / 10;
    let k = &s_profile.samples;
    if k[..edge].iter().any(|&v| v != k[0]) || k[n - edge..].iter().any(|&v| v != k[n - 1]) {
        return Err(Error::ProfileNotAsymptoticallyConstant);
    }
    let dim_d = d.dim();
    let mass = |s: usize| {
        Mat::from_fn(dim_d, dim_d, |i, j| d.matrix[(i, j)] + gamma[(i, j)] * (m * k[s]))
    };
    let h = assemble_wilson_line(lat_s, dim_d, 1.0, &mass, &|_| None);
    let ends = chiral_end_compression(n, dim_d, &mass(0), &mass(n - 1));
    let hc = ends.compress(&h);
    let tag = GeometryTag::new(format!("cylinder:{}:{}", d.geometry_tag.key, lat_s.geometry_key()), "cylinder extension")
        .with("m", m)
        .with("profile", &s_profile.kind)
        .with("removed_end_components", ends.removed);
    let op = GradedOperator::new(hc, Some(Grading::Diagonal(ends.labels.clone())), tag)?;
    Ok(op.with_layout(Layout { sites: n, comps: 2 * dim_d }).with_embedding(ends.basis()))
}
