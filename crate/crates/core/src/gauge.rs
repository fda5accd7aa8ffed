//! U(1) link fields on the torus.
//!
//! Charge orientation: the plaquette at `(ix, iy)` is traversed
//! `x → x+ŷ → x+x̂+ŷ → x+x̂`, so that a positive charge is what the lattice
//! Dirac operators below turn into a positive chirality index.

use crate::error::{Error, Result};
use crate::lattice::TorusLattice2D;
use crate::linalg::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FluxPlacement {
    Uniform,
    /// Flux spread evenly over plaquette columns `x_lo..x_hi` (plaquette column
    /// `ix` sits between site columns `ix` and `ix + 1`).
    Localized { x_lo: usize, x_hi: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeLinkField {
    pub n_x: usize,
    pub n_y: usize,
    /// Link phases (angles) on the bonds `x → x+x̂` and `x → x+ŷ`, site-indexed.
    pub phase_x: Vec<f64>,
    pub phase_y: Vec<f64>,
    pub holonomy_y: f64,
}

fn principal(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t - 2.0 * PI
    } else {
        t
    }
}

impl GaugeLinkField {
    pub fn trivial(n_x: usize, n_y: usize) -> Self {
        Self { n_x, n_y, phase_x: vec![0.0; n_x * n_y], phase_y: vec![0.0; n_x * n_y], holonomy_y: 0.0 }
    }

    fn idx(&self, ix: usize, iy: usize) -> usize {
        (ix % self.n_x) * self.n_y + (iy % self.n_y)
    }

    pub fn link_x(&self, ix: usize, iy: usize) -> C64 {
        C64::from_polar(1.0, self.phase_x[self.idx(ix, iy)])
    }

    pub fn link_y(&self, ix: usize, iy: usize) -> C64 {
        C64::from_polar(1.0, self.phase_y[self.idx(ix, iy)])
    }

    /// Principal-branch plaquette angle in the charge orientation.
    pub fn plaquette(&self, ix: usize, iy: usize) -> f64 {
        let px = |i, j| self.phase_x[self.idx(i, j)];
        let py = |i, j| self.phase_y[self.idx(i, j)];
        principal(py(ix, iy) + px(ix, iy + 1) - py(ix + 1, iy) - px(ix, iy))
    }

    pub fn plaquettes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_x * self.n_y);
        for ix in 0..self.n_x {
            for iy in 0..self.n_y {
                out.push(self.plaquette(ix, iy));
            }
        }
        out
    }

    pub fn total_charge(&self) -> f64 {
        self.plaquettes().iter().sum::<f64>() / (2.0 * PI)
    }

    /// Holonomy around the y-circle at column `ix`, in units of 2π, reduced to `[0, 1)`.
    pub fn column_holonomy(&self, ix: usize) -> f64 {
        let s: f64 = (0..self.n_y).map(|iy| self.phase_y[self.idx(ix, iy)]).sum();
        (s / (2.0 * PI)).rem_euclid(1.0)
    }

    /// Flux through the strip of plaquettes between columns `ix` and `ix + 1`, in units of 2π.
    pub fn strip_flux(&self, ix: usize) -> f64 {
        (0..self.n_y).map(|iy| self.plaquette(ix, iy)).sum::<f64>() / (2.0 * PI)
    }

    /// Complex-conjugate field: every phase and the charge change sign.
    pub fn conjugate(&self) -> Self {
        Self {
            n_x: self.n_x,
            n_y: self.n_y,
            phase_x: self.phase_x.iter().map(|p| -p).collect(),
            phase_y: self.phase_y.iter().map(|p| -p).collect(),
            holonomy_y: (-self.holonomy_y).rem_euclid(1.0),
        }
    }

    pub fn max_plaquette(&self) -> f64 {
        self.plaquettes().iter().fold(0.0, |m, p| m.max(p.abs()))
    }
}

/// Builds a field with total charge `q` and y-holonomy `a` at column 0.
///
/// The y-links of each column carry a uniform phase; the column holonomy grows
/// by the flux of each plaquette column. Closing the torus needs a compensating
/// y-dependent x-link on the bond from the last column back to column 0.
pub fn make_gauge_flux(lat: &TorusLattice2D, q: i64, placement: &FluxPlacement, a: f64) -> Result<GaugeLinkField> {
    let (nx, ny) = (lat.n_x, lat.n_y);
    let weights: Vec<f64> = match *placement {
        FluxPlacement::Uniform => vec![1.0 / nx as f64; nx],
        FluxPlacement::Localized { x_lo, x_hi } => {
            if x_hi <= x_lo || x_hi >= nx {
                return Err(Error::InvalidArgument(format!(
                    "flux window {x_lo}..{x_hi} must be nonempty and end before column {}",
                    nx - 1
                )));
            }
            if (x_lo..=x_hi).any(|ix| lat.in_collar(ix)) {
                return Err(Error::FluxInCollar { lo: x_lo, hi: x_hi });
            }
            let w = 1.0 / (x_hi - x_lo) as f64;
            (0..nx).map(|ix| if (x_lo..x_hi).contains(&ix) { w } else { 0.0 }).collect()
        }
    };
    // Charge orientation is opposite to the x-then-y loop, so the column
    // holonomy decreases by the enclosed charge.
    let qs = -(q as f64);
    let mut hol = vec![a; nx];
    for ix in 1..nx {
        hol[ix] = hol[ix - 1] + qs * weights[ix - 1];
    }
    let mut phase_x = vec![0.0; nx * ny];
    let mut phase_y = vec![0.0; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            phase_y[ix * ny + iy] = 2.0 * PI * hol[ix] / ny as f64;
        }
    }
    for iy in 0..ny {
        phase_x[(nx - 1) * ny + iy] = -2.0 * PI * qs * iy as f64 / ny as f64;
    }
    Ok(GaugeLinkField { n_x: nx, n_y: ny, phase_x, phase_y, holonomy_y: a.rem_euclid(1.0) })
}
