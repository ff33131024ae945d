//! Univariate distributions with bounded support, used by the DLD diagnostics.

use crate::error::{Error, Result};
use crate::stats::normal::{normal_cdf, normal_pdf};
use crate::stats::quadrature::{integrate, QuadConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    /// Normal law truncated to the support.
    Gaussian { mean: f64, variance: f64 },
    /// Sorted sample; the CDF is the empirical step function.
    Empirical(Vec<f64>),
    /// CDF values on an increasing grid, linearly interpolated.
    Tabulated { grid: Vec<f64>, cdf: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistSpec {
    kind: DistKind,
    lo: f64,
    hi: f64,
    // Gaussian normalization: Φ((lo-m)/s) and Φ((hi-m)/s) - Φ((lo-m)/s)
    norm: (f64, f64),
}

const CDF_TOL: f64 = 1e-12;

impl DistSpec {
    pub fn truncated_gaussian(mean: f64, variance: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::Argument(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        check_bounds(lo, hi)?;
        let s = variance.sqrt();
        let p_lo = normal_cdf((lo - mean) / s);
        let mass = normal_cdf((hi - mean) / s) - p_lo;
        if !(mass > 0.0) {
            return Err(Error::Argument("truncation interval carries no gaussian mass".into()));
        }
        Ok(Self {
            kind: DistKind::Gaussian { mean, variance },
            lo,
            hi,
            norm: (p_lo, mass),
        })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("empirical distribution needs samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("empirical samples must be finite".into()));
        }
        samples.sort_by(f64::total_cmp);
        let (lo, hi) = (samples[0], samples[samples.len() - 1]);
        Ok(Self { kind: DistKind::Empirical(samples), lo, hi, norm: (0.0, 1.0) })
    }

    pub fn tabulated(grid: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != cdf.len() {
            return Err(Error::Argument(
                "tabulated CDF needs at least two grid points and matching values".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("tabulation grid must be finite and strictly increasing".into()));
        }
        if cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("tabulated CDF must be nondecreasing".into()));
        }
        if cdf[0].abs() > CDF_TOL || (cdf[cdf.len() - 1] - 1.0).abs() > CDF_TOL {
            return Err(Error::Argument("tabulated CDF must run from 0 to 1".into()));
        }
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        Ok(Self { kind: DistKind::Tabulated { grid, cdf }, lo, hi, norm: (0.0, 1.0) })
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        match &self.kind {
            DistKind::Gaussian { mean, variance } => {
                let z = (x - mean) / variance.sqrt();
                ((normal_cdf(z) - self.norm.0) / self.norm.1).clamp(0.0, 1.0)
            }
            DistKind::Empirical(s) => {
                let k = s.partition_point(|&v| v <= x);
                k as f64 / s.len() as f64
            }
            DistKind::Tabulated { grid, cdf } => {
                let k = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1);
                let (x0, x1) = (grid[k - 1], grid[k]);
                let w = (x - x0) / (x1 - x0);
                cdf[k - 1] + w * (cdf[k] - cdf[k - 1])
            }
        }
    }

    /// Points where the CDF or its density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            DistKind::Gaussian { .. } => vec![self.lo, self.hi],
            DistKind::Empirical(s) => s.clone(),
            DistKind::Tabulated { grid, .. } => grid.clone(),
        }
    }

    /// E[g(Y) 1{a < Y ≤ b}].
    pub fn partial_expectation<G: Fn(f64) -> f64>(
        &self,
        g: G,
        a: f64,
        b: f64,
        cfg: QuadConfig,
    ) -> Result<f64> {
        let lo = a.max(self.lo);
        let hi = b.min(self.hi);
        if !(hi > lo) {
            return Ok(0.0);
        }
        match &self.kind {
            DistKind::Gaussian { mean, variance } => {
                let s = variance.sqrt();
                let scale = 1.0 / (s * self.norm.1);
                let r = integrate(|y| g(y) * normal_pdf((y - mean) / s) * scale, lo, hi, &[], cfg)?;
                Ok(r.value)
            }
            DistKind::Empirical(s) => {
                let start = s.partition_point(|&v| v <= a);
                let end = s.partition_point(|&v| v <= b);
                let total: f64 = s[start..end].iter().map(|&v| g(v)).sum();
                Ok(total / s.len() as f64)
            }
            DistKind::Tabulated { grid, cdf } => {
                let density = |y: f64| {
                    let k = grid.partition_point(|&p| p <= y).clamp(1, grid.len() - 1);
                    (cdf[k] - cdf[k - 1]) / (grid[k] - grid[k - 1])
                };
                let r = integrate(|y| g(y) * density(y), lo, hi, grid, cfg)?;
                Ok(r.value)
            }
        }
    }
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Argument(format!("support must be a bounded interval, got [{lo}, {hi}]")));
    }
    Ok(())
}
