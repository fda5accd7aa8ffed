//! Wall profiles `κ` sampled per site, and their tanh smoothing.

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Lattice1D, TorusLattice2D};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileKind {
    Step,
    Tanh { width: f64 },
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallProfile {
    pub kind: ProfileKind,
    pub level_plus: f64,
    pub level_minus: f64,
    /// Wall coordinates along the direction the profile varies in.
    pub wall_positions: Vec<f64>,
    /// One value per lattice site, in the site order of the lattice.
    pub samples: Vec<f64>,
    /// Identifies the lattice the samples live on.
    pub geometry_key: String,
    /// Signed distance of every site to the nearest wall, positive on the `κ₊` side.
    pub signed_distance: Vec<f64>,
    /// Volume of one lattice cell, used for discrete L² norms.
    pub cell_volume: f64,
}

impl WallProfile {
    /// Step profile on a line or circle. Sites left of the first wall take
    /// `κ₋`; the level alternates at every wall.
    pub fn step_line(lat: &Lattice1D, walls: &[f64], kappa_plus: f64, kappa_minus: f64) -> Result<Self> {
        let mut walls = walls.to_vec();
        walls.sort_by(f64::total_cmp);
        if lat.boundary == Boundary::Periodic && walls.len() % 2 == 1 {
            return Err(Error::OddWallCountOnCircle(walls.len()));
        }
        let mut samples = Vec::with_capacity(lat.n_sites);
        let mut signed_distance = Vec::with_capacity(lat.n_sites);
        for &x in &lat.site_coords {
            let crossed = walls.iter().filter(|&&w| w < x).count();
            let plus = crossed % 2 == 1;
            samples.push(if plus { kappa_plus } else { kappa_minus });
            let d = walls
                .iter()
                .map(|&w| lat.displacement(w, x).abs())
                .fold(f64::INFINITY, f64::min);
            signed_distance.push(if plus { d } else { -d });
        }
        Ok(Self {
            kind: ProfileKind::Step,
            level_plus: kappa_plus,
            level_minus: kappa_minus,
            wall_positions: walls,
            samples,
            geometry_key: lat.geometry_key(),
            signed_distance,
            cell_volume: lat.spacing(),
        })
    }

    /// `κ₊` on the columns of `X₊`, `κ₋` elsewhere, constant along y.
    pub fn step_torus(lat: &TorusLattice2D, kappa_plus: f64, kappa_minus: f64) -> Self {
        let mut samples = Vec::with_capacity(lat.n_sites());
        let mut signed_distance = Vec::with_capacity(lat.n_sites());
        for ix in 0..lat.n_x {
            let d = lat.signed_wall_distance(ix);
            let v = if lat.x_plus.contains(&ix) { kappa_plus } else { kappa_minus };
            for _ in 0..lat.n_y {
                samples.push(v);
                signed_distance.push(d);
            }
        }
        Self {
            kind: ProfileKind::Step,
            level_plus: kappa_plus,
            level_minus: kappa_minus,
            wall_positions: lat.cut_positions().to_vec(),
            samples,
            geometry_key: lat.geometry_key(),
            signed_distance,
            cell_volume: lat.spacing_x() * lat.spacing_y(),
        }
    }

    /// The same value on every site of a geometry.
    pub fn constant(geometry_key: &str, n_sites: usize, value: f64) -> Self {
        Self {
            kind: ProfileKind::Constant,
            level_plus: value,
            level_minus: value,
            wall_positions: Vec::new(),
            samples: vec![value; n_sites],
            geometry_key: geometry_key.to_string(),
            signed_distance: vec![f64::INFINITY; n_sites],
            cell_volume: 1.0,
        }
    }

    pub fn constant_line(lat: &Lattice1D, value: f64) -> Self {
        let mut p = Self::constant(&lat.geometry_key(), lat.n_sites, value);
        p.cell_volume = lat.spacing();
        p
    }

    pub fn constant_torus(lat: &TorusLattice2D, value: f64) -> Self {
        let mut p = Self::constant(&lat.geometry_key(), lat.n_sites(), value);
        p.cell_volume = lat.spacing_x() * lat.spacing_y();
        p
    }

    pub fn is_domain_wall(&self) -> bool {
        self.level_plus * self.level_minus < 0.0
    }

    pub fn min_level(&self) -> f64 {
        self.level_plus.min(self.level_minus)
    }

    pub fn max_level(&self) -> f64 {
        self.level_plus.max(self.level_minus)
    }

    /// Number of sign changes along the sample sequence, counting the wrap.
    pub fn sign_changes(&self, periodic: bool) -> usize {
        let s = &self.samples;
        let mut n = s.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        if periodic && s.len() > 1 && s[0] * s[s.len() - 1] < 0.0 {
            n += 1;
        }
        n
    }
}

/// Result of smoothing a step profile.
#[derive(Clone, Debug)]
pub struct SmoothedProfile {
    pub profile: WallProfile,
    pub l2_distance: f64,
}

/// Relative floor below which a width is treated as unresolvable: the
/// tanh profile is then numerically identical to the step at every site.
pub const WIDTH_FLOOR: f64 = 0.05;

/// Replaces a step profile by `((κ₊−κ₋)/2)·tanh(d/w) + (κ₊+κ₋)/2`, where `d` is the
/// signed distance to the nearest wall, and reports the discrete L² distance
/// between the two profiles.
pub fn smooth_wall_profile(step: &WallProfile, width: f64, spacing: f64) -> Result<SmoothedProfile> {
    if step.kind != ProfileKind::Step {
        return Err(Error::InvalidArgument("only step profiles can be smoothed".into()));
    }
    if !(width > WIDTH_FLOOR * spacing) {
        return Err(Error::WidthBelowResolution { width, spacing });
    }
    let half_jump = (step.level_plus - step.level_minus) / 2.0;
    let mid = (step.level_plus + step.level_minus) / 2.0;
    let (lo, hi) = (step.min_level(), step.max_level());
    let samples: Vec<f64> = step
        .signed_distance
        .iter()
        .map(|&d| (half_jump * (d / width).tanh() + mid).clamp(lo, hi))
        .collect();
    let l2 = samples
        .iter()
        .zip(&step.samples)
        .map(|(s, t)| (s - t).powi(2) * step.cell_volume)
        .sum::<f64>()
        .sqrt();
    let profile = WallProfile { kind: ProfileKind::Tanh { width }, samples, ..step.clone() };
    Ok(SmoothedProfile { profile, l2_distance: l2 })
}
