//! Central and noncentral chi-square distributions.

use super::gamma::{gamma_pq, ln_gamma};
use crate::error::{Error, Result};

/// Poisson mass that must be accounted for before the mixture series stops.
const POISSON_MASS_TARGET: f64 = 1.0 - 1e-14;
const TAIL_BOUND: f64 = 1e-14;
const MAX_TERMS: usize = 100_000;

fn check_df(df: f64) -> Result<()> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::Argument(format!("degrees of freedom must be positive, got {df}")));
    }
    Ok(())
}

/// P{χ²_df ≤ x}.
pub fn chi2_cdf(df: f64, x: f64) -> Result<f64> {
    check_df(df)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    gamma_pq(0.5 * df, 0.5 * x).map(|(p, _)| p)
}

/// P{χ²_df > x}.
pub fn chi2_sf(df: f64, x: f64) -> Result<f64> {
    check_df(df)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    gamma_pq(0.5 * df, 0.5 * x).map(|(_, q)| q)
}

fn ln_chi2_pdf(df: f64, x: f64) -> f64 {
    let a = 0.5 * df;
    (a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)
}

/// The p-quantile of the central chi-square distribution.
///
/// Safeguarded Newton iteration on whichever tail is smaller, so upper
/// quantiles keep full relative accuracy.
pub fn chi2_quantile(df: f64, p: f64) -> Result<f64> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Argument(format!("probability must lie in (0, 1), got {p}")));
    }
    let upper = p > 0.5;
    // g(x) increasing in x, root where g = 0
    let g = |x: f64| -> Result<f64> {
        let (lo, hi) = gamma_pq(0.5 * df, 0.5 * x)?;
        Ok(if upper { (1.0 - p) - hi } else { lo - p })
    };

    let mut lo = 0.0;
    let mut hi = df.max(1.0);
    while g(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numerical("chi-square quantile bracket overflow".into()));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let gx = g(x)?;
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = ln_chi2_pdf(df, x).exp();
        let newton = x - gx / dens;
        let next = if dens > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numerical(format!(
        "chi-square quantile did not converge (df = {df}, p = {p})"
    )))
}

fn ln_poisson(j: usize, mean: f64) -> f64 {
    let jf = j as f64;
    if mean == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + jf * mean.ln() - ln_gamma(jf + 1.0)
}

/// P{χ²_df(λ) > x}, the survival function of the noncentral chi-square
/// distribution.
///
/// Evaluated as the Poisson(λ/2) mixture of central survival functions,
/// summed outward from the Poisson mode. Each central term is bounded by one,
/// so the truncation error is at most the unvisited Poisson mass; the series
/// stops once that mass is below 1e-14.
pub fn noncentral_chi2_sf(df: f64, lambda: f64, x: f64) -> Result<f64> {
    check_df(df)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Argument(format!("noncentrality must be >= 0, got {lambda}")));
    }
    if x.is_nan() {
        return Err(Error::Argument("x is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if lambda == 0.0 {
        return chi2_sf(df, x);
    }

    let mean = 0.5 * lambda;
    let term = |j: usize| -> Result<(f64, f64)> {
        let w = ln_poisson(j, mean).exp();
        let q = gamma_pq(0.5 * df + j as f64, 0.5 * x)?.1;
        Ok((w, q))
    };

    let mode = mean.floor() as usize;
    let (w0, q0) = term(mode)?;
    let mut mass = w0;
    let mut total = w0 * q0;
    // next indices to visit on each side
    let mut down: Option<usize> = mode.checked_sub(1);
    let mut up = mode + 1;
    let mut w_down = down.map(|j| ln_poisson(j, mean).exp()).unwrap_or(0.0);
    let mut w_up = ln_poisson(up, mean).exp();

    for _ in 0..MAX_TERMS {
        if mass >= POISSON_MASS_TARGET {
            return Ok(total.clamp(0.0, 1.0));
        }
        // Geometric bounds on the Poisson mass beyond each frontier.
        let upper_tail = {
            let r = mean / (up as f64 + 1.0);
            if r < 1.0 {
                w_up / (1.0 - r)
            } else {
                f64::INFINITY
            }
        };
        let lower_tail = match down {
            None => 0.0,
            Some(j) => {
                let r = j as f64 / mean;
                if r < 1.0 {
                    w_down / (1.0 - r)
                } else {
                    f64::INFINITY
                }
            }
        };
        if upper_tail + lower_tail < TAIL_BOUND {
            return Ok(total.clamp(0.0, 1.0));
        }

        if down.is_some() && w_down >= w_up {
            let j = down.unwrap_or(0);
            let (w, q) = term(j)?;
            mass += w;
            total += w * q;
            down = j.checked_sub(1);
            w_down = down.map(|k| ln_poisson(k, mean).exp()).unwrap_or(0.0);
        } else {
            let (w, q) = term(up)?;
            mass += w;
            total += w * q;
            up += 1;
            w_up = ln_poisson(up, mean).exp();
        }
    }
    Err(Error::Numerical(format!(
        "noncentral chi-square series exceeded {MAX_TERMS} terms (df = {df}, lambda = {lambda}, x = {x}, mass = {mass})"
    )))
}
