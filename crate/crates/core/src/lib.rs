//! Finite-matrix laboratory for chiral and domain-wall Dirac operators.
//!
//! The crate builds Hermitian discretizations of one- and two-dimensional
//! Dirac operators (a Jackiw-Rebbi line, a gauged torus, a boundary circle and
//! a cylinder extension), computes their eta invariants and chirality indices,
//! solves the APS boundary problem on half of a torus and checks the
//! localization inequalities behind the domain-wall index theorem.
//!
//! Conventions: spinor components are site-major and spinor-minor; the
//! Clifford triple is `c = [[0,1],[−1,0]]`, `ε = [[0,1],[1,0]]`, `Γ = diag(1,−1)`.

pub mod aps;
pub mod clifford;
pub mod error;
pub mod gauge;
pub mod lattice;
pub mod linalg;
pub mod localization;
pub mod operators;
pub mod profile;
pub mod spectral;

pub use error::{Error, Result};
