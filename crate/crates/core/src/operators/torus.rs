//! The boundary circle operator and Dirac operators on the gauged torus.

use super::{GeometryTag, Grading, GradedOperator, Layout};
use crate::error::{Error, Result};
use crate::gauge::GaugeLinkField;
use crate::lattice::TorusLattice2D;
use crate::linalg::{CMat, C64, I, ZERO};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TorusScheme {
    Wilson { r: f64 },
    SpectralChiral,
}

/// Exact spectrum `(2π/L)(k + a)` for the Fourier window `k ∈ [−n/2, n/2)`, ascending.
pub fn circle_spectrum(n: usize, a: f64, circumference: f64) -> Vec<f64> {
    let lo = -(n as i64 / 2);
    (0..n as i64).map(|j| 2.0 * PI / circumference * ((lo + j) as f64 + a)).collect()
}

/// Dense matrix `F diag(p) F†` of the spectral operator `−i∂ + 2πa/L` on `n` points.
fn spectral_circle_matrix(n: usize, a: f64, circumference: f64) -> CMat {
    let p = circle_spectrum(n, a, circumference);
    let lo = -(n as i64 / 2);
    // Depends only on j − l, so tabulate one row.
    let row: Vec<C64> = (0..n)
        .map(|diff| {
            p.iter()
                .enumerate()
                .map(|(jk, &pk)| C64::from_polar(pk, 2.0 * PI * ((lo + jk as i64) * diff as i64) as f64 / n as f64))
                .sum::<C64>()
                / n as f64
        })
        .collect();
    let mut m = Mat::from_fn(n, n, |j, l| row[(j + n - l) % n]);
    for j in 0..n {
        for l in 0..j {
            let v = 0.5 * (m[(j, l)] + m[(l, j)].conj());
            m[(j, l)] = v;
            m[(l, j)] = v.conj();
        }
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
    }
    m
}

/// Boundary operator `A = −i∂_y + 2πa/L` on a circle of `n` sites, diagonal in
/// the Fourier basis with a fixed window of momenta.
pub fn build_circle_operator_a(n: usize, a: f64, circumference: f64) -> Result<GradedOperator> {
    if n < 8 {
        return Err(Error::DegenerateLattice(n));
    }
    if !(circumference > 0.0) {
        return Err(Error::InvalidArgument("circumference must be positive".into()));
    }
    if (a - a.round()).abs() < 1e-12 {
        return Err(Error::ZeroModeOnBoundary(a));
    }
    let tag = GeometryTag::new(format!("circle:{n}:{circumference}"), "boundary circle operator")
        .with("holonomy", a)
        .with("circumference", circumference);
    Ok(GradedOperator::new(spectral_circle_matrix(n, a, circumference), None, tag)?
        .with_layout(Layout { sites: n, comps: 1 }))
}

/// Block of `D` coupling site `s` (spinor `σ`) to site `t` (spinor `σ'`).
fn add_block(h: &mut CMat, s: usize, t: usize, b: [[C64; 2]; 2]) {
    for i in 0..2 {
        for j in 0..2 {
            h[(2 * s + i, 2 * t + j)] += b[i][j];
        }
    }
}

fn scale(b: [[f64; 2]; 2], z: C64) -> [[C64; 2]; 2] {
    [[z * b[0][0], z * b[0][1]], [z * b[1][0], z * b[1][1]]]
}

/// Dirac operator on the gauged torus, two spinor components per site.
///
/// `wilson(r)`: `D = Γ D_W` with `D_W = σ_x ∇_x + σ_y ∇_y + r W`; in terms of the
/// Clifford triple this is `c ∇_x − i ε ∇_y + Γ r W`. It is Hermitian but not odd.
///
/// `spectral_chiral`: for a flat field, `D = G (i c ⊗ A_x + ε ⊗ A_y) G†` where
/// `A_x`, `A_y` are the spectral circle operators at the two holonomies and `G`
/// the gauge transformation to uniform links. Exactly odd.
pub fn build_torus_dirac(lat: &TorusLattice2D, gauge: &GaugeLinkField, scheme: TorusScheme) -> Result<GradedOperator> {
    if gauge.n_x != lat.n_x || gauge.n_y != lat.n_y {
        return Err(Error::GeometryMismatch {
            profile: format!("gauge {}x{}", gauge.n_x, gauge.n_y),
            operator: lat.geometry_key(),
        });
    }
    let (nx, ny) = (lat.n_x, lat.n_y);
    let n = 2 * nx * ny;
    let grading: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let layout = Layout { sites: nx * ny, comps: 2 };
    match scheme {
        TorusScheme::Wilson { r } => {
            let (ax, ay) = (lat.spacing_x(), lat.spacing_y());
            let c = [[0.0, 1.0], [-1.0, 0.0]];
            let eps = [[0.0, 1.0], [1.0, 0.0]];
            let g = [[1.0, 0.0], [0.0, -1.0]];
            let hop_x = [[c[0][0] - r * g[0][0], c[0][1] - r * g[0][1]], [c[1][0] - r * g[1][0], c[1][1] - r * g[1][1]]];
            let mut h: CMat = Mat::zeros(n, n);
            for ix in 0..nx {
                for iy in 0..ny {
                    let s = lat.site(ix, iy);
                    add_block(&mut h, s, s, scale(g, C64::new(r * (1.0 / ax + 1.0 / ay), 0.0)));
                    let sx = lat.site((ix + 1) % nx, iy);
                    let bx = scale(hop_x, gauge.link_x(ix, iy) / (2.0 * ax));
                    add_block(&mut h, s, sx, bx);
                    add_block(&mut h, sx, s, adjoint(bx));
                    let sy = lat.site(ix, (iy + 1) % ny);
                    let uy = gauge.link_y(ix, iy) / (2.0 * ay);
                    let mut by = scale(g, -r * uy);
                    for i in 0..2 {
                        for j in 0..2 {
                            by[i][j] += -I * eps[i][j] * uy;
                        }
                    }
                    add_block(&mut h, s, sy, by);
                    add_block(&mut h, sy, s, adjoint(by));
                }
            }
            let tag = GeometryTag::new(lat.geometry_key(), "Wilson torus Dirac operator")
                .with("scheme", scheme)
                .with("total_charge", gauge.total_charge());
            Ok(GradedOperator::new(h, Some(Grading::Diagonal(grading)), tag)?
                .with_layout(layout)
                .with_index_mass(1.0 / ax.max(ay)))
        }
        TorusScheme::SpectralChiral => {
            let worst = gauge.max_plaquette();
            if worst > 1e-10 {
                return Err(Error::ChiralSchemeWithFlux(worst));
            }
            let hy = gauge.column_holonomy(0);
            let hx = ((0..nx).map(|ix| gauge.phase_x[ix * ny]).sum::<f64>() / (2.0 * PI)).rem_euclid(1.0);
            if (hx - hx.round()).abs() < 1e-12 && (hy - hy.round()).abs() < 1e-12 {
                log::warn!("periodic torus with trivial holonomy: the constant spinors are zero modes");
            }
            let a_x = spectral_circle_matrix(nx, hx, lat.extent_x);
            let a_y = spectral_circle_matrix(ny, hy, lat.extent_y);
            // Gauge angles θ with φ_μ(x) = θ(x) + ν_μ − θ(x+μ).
            let (nu_x, nu_y) = (2.0 * PI * hx / nx as f64, 2.0 * PI * hy / ny as f64);
            let mut theta = vec![0.0; nx * ny];
            for ix in 1..nx {
                theta[ix * ny] = theta[(ix - 1) * ny] + nu_x - gauge.phase_x[(ix - 1) * ny];
            }
            for ix in 0..nx {
                for iy in 1..ny {
                    theta[ix * ny + iy] = theta[ix * ny + iy - 1] + nu_y - gauge.phase_y[ix * ny + iy - 1];
                }
            }
            let gph: Vec<C64> = theta.iter().map(|&t| C64::from_polar(1.0, t)).collect();
            let ic = [[ZERO, I], [-I, ZERO]];
            let mut h: CMat = Mat::zeros(n, n);
            for ix in 0..nx {
                for iy in 0..ny {
                    let s = lat.site(ix, iy);
                    for jx in 0..nx {
                        let t = lat.site(jx, iy);
                        let z = a_x[(ix, jx)] * gph[s] * gph[t].conj();
                        for i in 0..2 {
                            for j in 0..2 {
                                h[(2 * s + i, 2 * t + j)] += ic[i][j] * z;
                            }
                        }
                    }
                    for jy in 0..ny {
                        let t = lat.site(ix, jy);
                        let z = a_y[(iy, jy)] * gph[s] * gph[t].conj();
                        h[(2 * s, 2 * t + 1)] += z;
                        h[(2 * s + 1, 2 * t)] += z;
                    }
                }
            }
            let tag = GeometryTag::new(lat.geometry_key(), "spectral chiral torus Dirac operator")
                .with("scheme", scheme)
                .with("holonomy_x", hx)
                .with("holonomy_y", hy);
            Ok(GradedOperator::new(h, Some(Grading::Diagonal(grading)), tag)?.with_layout(layout))
        }
    }
}

fn adjoint(b: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]]
}
