//! Naive mean-field empirical Bayes for the Gaussian linear model
//! `y = X beta + eps`, `beta_i` i.i.d. from an unknown prior on a bounded
//! interval.
//!
//! The prior is discretized on a fixed atom grid. Its weights are chosen by
//! maximizing a mean-field lower bound on the marginal likelihood, in which
//! every coordinate of the variational posterior is a quadratic tilt of the
//! prior. The fitted tilts give a product-form approximate posterior used for
//! point estimates, credible intervals and the null proportion.
//!
//! The crate is `no_std` (with `alloc`). Enable `std` for `std::error::Error`
//! impls and `parallel` for rayon-backed per-coordinate evaluation; results
//! are bit-identical either way.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod elbo;
pub mod error;
mod math;
pub mod optimizer;
pub mod oracle;
pub mod posterior;
pub mod problem;
pub mod sim;
pub mod tilt;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use optimizer::{fit, FitConfig, FitResult, InitMode};
pub use posterior::PosteriorProduct;
pub use problem::{DesignReport, ProblemStats};
pub use tilt::{GridSpec, PriorGrid, TiltedMeasure};
