//! Numerics for deciding when the Bayes-optimal estimator of a source seen
//! through additive noise is linear.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function over immutable inputs; IO, CSV and the experiment runner live in
//! the `optlin` companion crate.
//!
//! Module map:
//!
//! - [`distributions`]: closed-form and tabulated scalar laws.
//! - [`spectral`]: characteristic functions, inversion, branch-tracked
//!   fractional powers.
//! - [`matching`]: matching source/noise construction, the moment recursion
//!   and the L_p linearity residual.
//! - [`estimation`]: scalar optimal estimators by lattice quadrature, risks,
//!   nonlinearity gaps and SNR sweeps.
//! - [`vector`]: the two-dimensional case (Wiener matrix, joint
//!   diagonalization, rotated product laws, the Givens experiment).

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod distributions;
mod error;
pub mod estimation;
pub mod matching;
pub mod spectral;
pub mod vector;

pub use distributions::{DensityGrid, Distribution};
pub use error::{Error, Result};
pub use estimation::{Estimator, Problem};
pub use matching::{MatchResult, MomentSequence, Verdict};
pub use spectral::{CharFn, LogCharFn};
pub use vector::{CovPair, LinearityTransform, Mat2, RotatedProduct2D};

/// Default quadrature step for scalar lattices.
pub const DEFAULT_STEP: f64 = 0.01;

/// Default quadrature step for two-dimensional lattices.
pub const DEFAULT_STEP_2D: f64 = 0.02;
