//! Tests of equal (conditional) predictive ability when forecasts are
//! evaluated against a noisy but conditionally unbiased proxy of the target.
//!
//! - [`loss`]: Bregman and quantile losses, difference-of-loss-difference
//!   diagnostics.
//! - [`stats`]: gamma/χ² distribution functions, quadrature, HAC covariance.
//! - [`ecpa`]: Wald-type ECPA test and the proxy-unbiasedness check.
//! - [`power`]: closed-form local power for the AR(1) design.
//! - [`sim`]: Monte Carlo rejection-frequency experiments.
//! - [`io`]: CSV panels and configuration files.

// NaN must fail range guards, so `!(x > 0.0)` is intentional throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ecpa;
pub mod error;
pub mod io;
pub mod loss;
pub mod power;
pub mod sim;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
