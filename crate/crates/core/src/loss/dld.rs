//! Expected differences of loss differences (target vs. proxy) for losses
//! outside the Bregman class.

use super::dist::DistSpec;
use super::quantile::QuantileLossSpec;
use crate::error::{Error, Result};
use crate::stats::quadrature::{integrate, QuadConfig};
use std::cell::Cell;

/// E[d(Y, x1, x2)] − E[d(Ŷ, x1, x2)] for the quantile loss, Y ~ F, Ŷ ~ F̂.
///
/// Computed from the closed-form decomposition into truncated expectations of
/// g and CDF boundary terms; the level α cancels.
pub fn expected_dld_quantile(
    f: &DistSpec,
    f_hat: &DistSpec,
    x1: f64,
    x2: f64,
    spec: &QuantileLossSpec,
) -> Result<f64> {
    expected_dld_quantile_with(f, f_hat, x1, x2, spec, QuadConfig::default())
}

pub fn expected_dld_quantile_with(
    f: &DistSpec,
    f_hat: &DistSpec,
    x1: f64,
    x2: f64,
    spec: &QuantileLossSpec,
    cfg: QuadConfig,
) -> Result<f64> {
    let support = spec.support();
    for (name, v) in [("x1", x1), ("x2", x2)] {
        if !support.contains(v) {
            return Err(Error::Domain(format!("{name} = {v} outside the support {support}")));
        }
    }
    for d in [f, f_hat] {
        let (lo, hi) = d.support();
        if !(support.contains(lo) && support.contains(hi)) {
            return Err(Error::Domain(format!(
                "distribution support [{lo}, {hi}] is not contained in {support}"
            )));
        }
    }
    if x1 == x2 {
        return Ok(0.0);
    }
    let g = |y: f64| spec.g(y);
    // E[g(Y)(1{Y ≤ x2} − 1{Y ≤ x1})]
    let band = |d: &DistSpec| -> Result<f64> {
        if x1 < x2 {
            d.partial_expectation(g, x1, x2, cfg)
        } else {
            d.partial_expectation(g, x2, x1, cfg).map(|v| -v)
        }
    };
    let interior = band(f)? - band(f_hat)?;
    let boundary = spec.g(x1) * (f.cdf(x1) - f_hat.cdf(x1)) - spec.g(x2) * (f.cdf(x2) - f_hat.cdf(x2));
    Ok(interior + boundary)
}

/// Expected DLD for the threshold-weighted CRPS:
/// 2 ∫ u(z) [G2(z) − G1(z)] [F(z) − F̂(z)] dz.
pub fn expected_dld_twcrps<U: Fn(f64) -> f64>(
    f: &DistSpec,
    f_hat: &DistSpec,
    g1: &DistSpec,
    g2: &DistSpec,
    u: U,
) -> Result<f64> {
    let (a, b) = {
        let (l1, h1) = f.support();
        let (l2, h2) = f_hat.support();
        (l1.min(l2), h1.max(h2))
    };
    let mut breaks = Vec::new();
    for d in [f, f_hat, g1, g2] {
        breaks.extend(d.breakpoints());
    }
    let negative_weight = Cell::new(None);
    let integrand = |z: f64| {
        let w = u(z);
        if w < 0.0 && negative_weight.get().is_none() {
            negative_weight.set(Some(z));
        }
        w * (g2.cdf(z) - g1.cdf(z)) * (f.cdf(z) - f_hat.cdf(z))
    };
    let r = integrate(integrand, a, b, &breaks, QuadConfig::default())?;
    if let Some(z) = negative_weight.get() {
        return Err(Error::Argument(format!("weight function is negative at z = {z}")));
    }
    Ok(2.0 * r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::bregman::Interval;

    fn support() -> Interval {
        Interval::closed(-5.0, 5.0)
    }

    #[test]
    fn equal_forecasts_give_zero() {
        let f = DistSpec::truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap();
        let fh = DistSpec::truncated_gaussian(0.3, 1.0, -5.0, 5.0).unwrap();
        let spec = QuantileLossSpec::pinball(0.5, support()).unwrap();
        assert_eq!(expected_dld_quantile(&f, &fh, 0.7, 0.7, &spec).unwrap(), 0.0);
    }

    #[test]
    fn identical_distributions_give_zero() {
        let f = DistSpec::truncated_gaussian(0.2, 0.8, -5.0, 5.0).unwrap();
        let spec = QuantileLossSpec::pinball(0.3, support()).unwrap();
        let v = expected_dld_quantile(&f, &f.clone(), -1.0, 2.0, &spec).unwrap();
        assert!(v.abs() < 1e-8);
    }

    #[test]
    fn antisymmetric_in_forecasts() {
        let f = DistSpec::truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap();
        let fh = DistSpec::truncated_gaussian(0.3, 1.0, -5.0, 5.0).unwrap();
        let spec = QuantileLossSpec::new(0.5, "exp", f64::exp, support()).unwrap();
        let a = expected_dld_quantile(&f, &fh, -1.0, 1.0, &spec).unwrap();
        let b = expected_dld_quantile(&f, &fh, 1.0, -1.0, &spec).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn forecast_outside_support() {
        let f = DistSpec::truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap();
        let spec = QuantileLossSpec::pinball(0.5, support()).unwrap();
        assert!(matches!(
            expected_dld_quantile(&f, &f, -6.0, 1.0, &spec),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn twcrps_vanishing_cases() {
        let f = DistSpec::truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap();
        let fh = DistSpec::truncated_gaussian(0.3, 1.0, -5.0, 5.0).unwrap();
        assert_eq!(expected_dld_twcrps(&f, &f, &fh, &f, |_| 1.0).unwrap(), 0.0);
        assert_eq!(expected_dld_twcrps(&f, &fh, &f, &f, |_| 1.0).unwrap(), 0.0);
    }

    #[test]
    fn twcrps_rejects_negative_weight() {
        let f = DistSpec::truncated_gaussian(0.0, 1.0, -5.0, 5.0).unwrap();
        let fh = DistSpec::truncated_gaussian(0.3, 1.0, -5.0, 5.0).unwrap();
        assert!(expected_dld_twcrps(&f, &fh, &fh, &f, |z| z).is_err());
    }
}
