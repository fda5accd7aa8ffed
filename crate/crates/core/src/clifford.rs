//! The three 2×2 generators used for every spinor: `c` (derivative direction),
//! `eps` (mass/boundary direction) and `gamma` (chirality).

use crate::linalg::{CMat, C64, ONE, ZERO};
use faer::Mat;

#[derive(Clone, Debug)]
pub struct CliffordTriple {
    pub c: CMat,
    pub eps: CMat,
    pub gamma: CMat,
}

fn m2(a: [[f64; 2]; 2]) -> CMat {
    Mat::from_fn(2, 2, |i, j| C64::new(a[i][j], 0.0))
}

impl CliffordTriple {
    pub fn standard() -> Self {
        Self {
            c: m2([[0.0, 1.0], [-1.0, 0.0]]),
            eps: m2([[0.0, 1.0], [1.0, 0.0]]),
            gamma: m2([[1.0, 0.0], [0.0, -1.0]]),
        }
    }

    /// Largest entrywise violation of the defining relations. Zero for the
    /// standard triple since every product is computed on exact integers.
    pub fn relation_residual(&self) -> f64 {
        let id = Mat::from_fn(2, 2, |i, j| if i == j { ONE } else { ZERO });
        let neg_id = Mat::from_fn(2, 2, |i, j| if i == j { -ONE } else { ZERO });
        let mut worst = 0.0f64;
        let mut check = |a: CMat, b: &CMat| {
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
                }
            }
        };
        check(&self.c * &self.c, &neg_id);
        check(&self.eps * &self.eps, &id);
        check(&self.gamma * &self.gamma, &id);
        check(&self.c * &self.eps, &self.gamma);
        let zero = Mat::<C64>::zeros(2, 2);
        for (a, b) in [(&self.c, &self.eps), (&self.c, &self.gamma), (&self.eps, &self.gamma)] {
            check(a * b + b * a, &zero);
        }
        worst
    }
}

/// Entries of the standard triple as plain arrays, convenient for assembly loops.
pub const C: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];
pub const EPS: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
pub const GAMMA: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];
