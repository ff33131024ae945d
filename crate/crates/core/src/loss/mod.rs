//! Loss families for point forecasts and the non-robustness diagnostics for
//! quantile and distributional scores.

pub mod bregman;
pub mod dist;
pub mod dld;
pub mod quantile;

pub use bregman::{BoxDomain, BregmanSpec, Interval};
pub use dist::{DistKind, DistSpec};
pub use dld::{expected_dld_quantile, expected_dld_twcrps};
pub use quantile::QuantileLossSpec;

use crate::error::{Error, Result};

/// Scalar loss used to build loss-difference series.
#[derive(Debug, Clone)]
pub enum Loss {
    Bregman(BregmanSpec),
    Quantile(QuantileLossSpec),
    /// |y − x|; elicits the median and is not exactly robust to proxies.
    AbsoluteError,
}

impl Loss {
    pub fn squared_error() -> Self {
        Loss::Bregman(BregmanSpec::squared_error(1))
    }

    pub fn name(&self) -> String {
        match self {
            Loss::Bregman(b) => b.name().to_string(),
            Loss::Quantile(q) => format!("quantile({})", q.alpha()),
            Loss::AbsoluteError => "ae".into(),
        }
    }

    /// L(y, x1) − L(y, x2) for scalar observations and forecasts.
    pub fn difference(&self, y: f64, x1: f64, x2: f64) -> Result<f64> {
        match self {
            Loss::Bregman(b) => {
                if b.dim() != 1 {
                    return Err(Error::Unsupported(format!(
                        "loss '{}' has dimension {}; loss-difference series need scalar targets",
                        b.name(),
                        b.dim()
                    )));
                }
                b.loss_difference_scalar(y, x1, x2)
            }
            Loss::Quantile(q) => q.loss_difference(y, x1, x2),
            Loss::AbsoluteError => {
                if !(y.is_finite() && x1.is_finite() && x2.is_finite()) {
                    return Err(Error::Domain("absolute error needs finite inputs".into()));
                }
                Ok((y - x1).abs() - (y - x2).abs())
            }
        }
    }
}
