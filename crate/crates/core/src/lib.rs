//! Numerical laboratory for radial quasilinear equations of p-Laplacian type.
//!
//! The crate solves `-div(|grad u|^{p-2} grad u) = h` for radial data on `R^N`
//! and on balls, evaluates Wolff potentials of radial measures, and extracts
//! empirical constants for supremum estimates of Moser type.

pub mod error;
pub mod exponents;
pub mod quad;
pub mod potential;
pub mod radial;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use exponents::{ExponentParams, IterationExponents};
pub use radial::{GradingKind, NormValue, RadialFunction, RadialGrid, Tail, WeightSpec};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/exponents.md")]
    mod exponents {}
    #[doc = include_str!("../../../book/src/radial.md")]
    mod radial {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/potential.md")]
    mod potential {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
