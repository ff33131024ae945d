//! Standard normal distribution function and folded-normal moments.

use super::gamma::gamma_q;
use crate::error::{Error, Result};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Standard normal CDF Φ(z).
///
/// Uses erfc(t) = Q(1/2, t²), so both tails are computed without cancellation.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z.is_infinite() {
        return if z > 0.0 { 1.0 } else { 0.0 };
    }
    // Q(1/2, ·) cannot fail for a finite nonnegative argument.
    let tail = 0.5 * gamma_q(0.5, 0.5 * z * z).unwrap_or(0.0);
    if z < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// E|X| for X ~ N(m, s²).
pub fn folded_normal_mean(m: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Argument(format!(
            "folded normal scale must be positive and finite, got {s}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::Argument(format!("folded normal mean must be finite, got {m}")));
    }
    let r = m / s;
    Ok(s * SQRT_2_OVER_PI * (-0.5 * r * r).exp() + m * (1.0 - 2.0 * normal_cdf(-r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_normal_mean() {
        let v = folded_normal_mean(0.0, 1.0).unwrap();
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn far_from_zero_is_identity() {
        assert!((folded_normal_mean(10.0, 1.0).unwrap() - 10.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_in_mean() {
        for &(m, s) in &[(0.3, 1.0), (1.7, 0.4), (0.8, 1.2)] {
            let a = folded_normal_mean(m, s).unwrap();
            let b = folded_normal_mean(-m, s).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive_scale() {
        assert!(folded_normal_mean(0.0, 0.0).is_err());
        assert!(folded_normal_mean(0.0, -1.0).is_err());
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Φ(-1.959963984540054) = 0.025
        assert!((normal_cdf(-1.959_963_984_540_054) - 0.025).abs() < 1e-15);
        assert!((normal_cdf(1.0) + normal_cdf(-1.0) - 1.0).abs() < 1e-15);
    }
}
