use crate::error::{Error, Result};
use crate::power::{stationary_variance, SimParams};
use rand::Rng;
use rand_distr::StandardNormal;

/// One simulated path of the AR(1) design.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpDraw {
    pub y: Vec<f64>,
    pub y_hat: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Conditional mean μ(1−φ) + φY_{t−1}.
    pub x_star: Vec<f64>,
}

impl DgpDraw {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Simulates t = 1..=n:
///
/// Y_t = μ(1−φ) + φY_{t−1} + ε_t, Ŷ_t = Y_t + ε̂_t,
/// x_1t = μ(1−φ) + φY_{t−1} + ε_{1,t−1}, x_2t = φY_{t−1},
///
/// with Y_0 drawn from N(μ, σ_ε²/(1−φ²)). Each step consumes exactly three
/// standard normals (ε_{1,t−1}, ε_t, ε̂_t, in that order) whatever the
/// variances, so paths with different noise levels share innovations when
/// started from the same RNG state.
pub fn simulate_path<R: Rng + ?Sized>(p: &SimParams, sigma1_2: f64, rng: &mut R) -> Result<DgpDraw> {
    p.validate()?;
    if !(sigma1_2 >= 0.0) || !sigma1_2.is_finite() {
        return Err(Error::Argument(format!("sigma1^2 must be finite and >= 0, got {sigma1_2}")));
    }
    let n = p.n;
    let sd_y0 = stationary_variance(p)?.sqrt();
    let (s_eps, s_hat, s_1) = (p.sigma_eps2.sqrt(), p.sigma_hat2.sqrt(), sigma1_2.sqrt());
    let c = p.bias();

    let mut out = DgpDraw {
        y: Vec::with_capacity(n),
        y_hat: Vec::with_capacity(n),
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        x_star: Vec::with_capacity(n),
    };
    let z0: f64 = rng.sample(StandardNormal);
    let mut y_prev = p.mu + sd_y0 * z0;
    for _ in 0..n {
        let e1: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let eh: f64 = rng.sample(StandardNormal);
        let star = c + p.phi * y_prev;
        let y = star + s_eps * e;
        out.x_star.push(star);
        out.x1.push(star + s_1 * e1);
        out.x2.push(p.phi * y_prev);
        out.y.push(y);
        out.y_hat.push(y + s_hat * eh);
        y_prev = y;
    }
    Ok(out)
}
