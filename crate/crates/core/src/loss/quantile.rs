//! Generalized piecewise-linear losses for the α-quantile.

use super::bregman::Interval;
use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

pub type Transform = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// L(y, x) = (1{x ≥ y} − α)(g(x) − g(y)) for strictly increasing g on a
/// bounded support.
#[derive(Clone)]
pub struct QuantileLossSpec {
    alpha: f64,
    g: Transform,
    g_name: String,
    support: Interval,
}

impl fmt::Debug for QuantileLossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantileLossSpec")
            .field("alpha", &self.alpha)
            .field("g", &self.g_name)
            .field("support", &self.support)
            .finish()
    }
}

impl QuantileLossSpec {
    /// Monotonicity of `g` is probed on an evenly spaced grid over the support.
    pub fn new(
        alpha: f64,
        g_name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: Interval,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Argument(format!("quantile level must lie in (0, 1), got {alpha}")));
        }
        if !(support.lo.is_finite() && support.hi.is_finite() && support.lo < support.hi) {
            return Err(Error::Argument(format!("quantile loss support must be a bounded interval, got {support}")));
        }
        let spec = Self { alpha, g: Arc::new(g), g_name: g_name.into(), support };
        spec.probe_monotone(257)?;
        Ok(spec)
    }

    /// Pinball loss (g = identity).
    pub fn pinball(alpha: f64, support: Interval) -> Result<Self> {
        Self::new(alpha, "identity", |x| x, support)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn g_name(&self) -> &str {
        &self.g_name
    }

    fn probe_monotone(&self, points: usize) -> Result<()> {
        let (lo, hi) = (self.support.lo, self.support.hi);
        let mut prev = self.g(lo);
        for i in 1..points {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let gx = self.g(x);
            if !(gx > prev) {
                return Err(Error::Argument(format!(
                    "transform '{}' is not strictly increasing near {x}",
                    self.g_name
                )));
            }
            prev = gx;
        }
        Ok(())
    }

    fn check(&self, what: &str, v: f64) -> Result<()> {
        if !self.support.contains(v) {
            return Err(Error::Domain(format!(
                "{what} {v} outside the support {}",
                self.support
            )));
        }
        Ok(())
    }

    pub fn loss(&self, y: f64, x: f64) -> Result<f64> {
        self.check("observation", y)?;
        self.check("forecast", x)?;
        let ind = if x >= y { 1.0 } else { 0.0 };
        Ok((ind - self.alpha) * (self.g(x) - self.g(y)))
    }

    pub fn loss_difference(&self, y: f64, x1: f64, x2: f64) -> Result<f64> {
        Ok(self.loss(y, x1)? - self.loss(y, x2)?)
    }
}
