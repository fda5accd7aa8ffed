//! Lattices: a line or circle for one-dimensional problems and a torus split
//! into two halves for the two-dimensional ones.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice1D {
    pub n_sites: usize,
    pub extent: f64,
    pub boundary: Boundary,
    pub site_coords: Vec<f64>,
}

impl Lattice1D {
    /// Sites of a periodic lattice sit at cell midpoints of `[-L/2, L/2)`;
    /// a Dirichlet lattice has its (removed) boundary nodes at `±L/2`.
    pub fn new(n_sites: usize, extent: f64, boundary: Boundary) -> Result<Self> {
        if n_sites < 8 {
            return Err(Error::DegenerateLattice(n_sites));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidArgument(format!("extent must be positive, got {extent}")));
        }
        let site_coords = match boundary {
            Boundary::Periodic => {
                let a = extent / n_sites as f64;
                (0..n_sites).map(|i| -extent / 2.0 + (i as f64 + 0.5) * a).collect()
            }
            Boundary::Dirichlet => {
                let a = extent / (n_sites + 1) as f64;
                (0..n_sites).map(|i| -extent / 2.0 + (i as f64 + 1.0) * a).collect()
            }
        };
        Ok(Self { n_sites, extent, boundary, site_coords })
    }

    pub fn spacing(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.extent / self.n_sites as f64,
            Boundary::Dirichlet => self.extent / (self.n_sites + 1) as f64,
        }
    }

    pub fn geometry_key(&self) -> String {
        let b = match self.boundary {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        };
        format!("line:{b}:{}:{}", self.n_sites, self.extent)
    }

    /// Signed distance from `x` to `y` (`y - x`), wrapped on a circle.
    pub fn displacement(&self, x: f64, y: f64) -> f64 {
        let d = y - x;
        match self.boundary {
            Boundary::Dirichlet => d,
            Boundary::Periodic => d - self.extent * (d / self.extent).round(),
        }
    }
}

/// A torus of `n_x × n_y` sites split along x into `x_plus` and its complement.
///
/// The two cuts sit half a lattice spacing before `x_plus.start` and before
/// `x_plus.end`; around each cut a collar band of `collar_width` columns on
/// either side is kept free of flux so that the operator there has product form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusLattice2D {
    pub n_x: usize,
    pub n_y: usize,
    pub extent_x: f64,
    pub extent_y: f64,
    pub x_plus: Range<usize>,
    pub collar_width: usize,
}

impl TorusLattice2D {
    pub fn new(
        n_x: usize,
        n_y: usize,
        extent_x: f64,
        extent_y: f64,
        x_plus: Range<usize>,
        collar_width: usize,
    ) -> Result<Self> {
        if n_x < 4 || n_y < 4 {
            return Err(Error::DegenerateLattice(n_x.min(n_y)));
        }
        if !(extent_x > 0.0 && extent_y > 0.0) {
            return Err(Error::InvalidArgument("torus extents must be positive".into()));
        }
        if collar_width == 0
            || x_plus.start < collar_width
            || x_plus.end + collar_width > n_x
            || x_plus.end < x_plus.start + 2 * collar_width
        {
            return Err(Error::InvalidArgument(format!(
                "collar bands of width {collar_width} around {x_plus:?} do not fit strictly inside 0..{n_x}"
            )));
        }
        Ok(Self { n_x, n_y, extent_x, extent_y, x_plus, collar_width })
    }

    /// Unit-spacing torus with `X₊` the middle half and collars of width `max(2, n/8)`.
    pub fn half_split(n: usize) -> Result<Self> {
        Self::new(n, n, n as f64, n as f64, n / 4..3 * n / 4, (n / 8).max(2))
    }

    pub fn n_sites(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn spacing_x(&self) -> f64 {
        self.extent_x / self.n_x as f64
    }

    pub fn spacing_y(&self) -> f64 {
        self.extent_y / self.n_y as f64
    }

    /// Site ordering is x-major: `site = ix * n_y + iy`.
    pub fn site(&self, ix: usize, iy: usize) -> usize {
        ix * self.n_y + iy
    }

    pub fn x_coord(&self, ix: usize) -> f64 {
        ix as f64 * self.spacing_x()
    }

    /// x-coordinates of the two cuts.
    pub fn cut_positions(&self) -> [f64; 2] {
        let a = self.spacing_x();
        [(self.x_plus.start as f64 - 0.5) * a, (self.x_plus.end as f64 - 0.5) * a]
    }

    /// Column ranges of the two collar bands (around the left and right cut).
    pub fn collar_bands(&self) -> [Range<usize>; 2] {
        let w = self.collar_width;
        [self.x_plus.start - w..self.x_plus.start + w, self.x_plus.end - w..self.x_plus.end + w]
    }

    pub fn in_collar(&self, ix: usize) -> bool {
        self.collar_bands().iter().any(|b| b.contains(&ix))
    }

    pub fn geometry_key(&self) -> String {
        format!("torus:{}x{}:{}x{}", self.n_x, self.n_y, self.extent_x, self.extent_y)
    }

    /// Periodic signed distance from column `ix` to the nearest cut, positive inside `X₊`.
    pub fn signed_wall_distance(&self, ix: usize) -> f64 {
        let x = self.x_coord(ix);
        let dist = self
            .cut_positions()
            .iter()
            .map(|&c| {
                let d = x - c;
                (d - self.extent_x * (d / self.extent_x).round()).abs()
            })
            .fold(f64::INFINITY, f64::min);
        if self.x_plus.contains(&ix) {
            dist
        } else {
            -dist
        }
    }
}
