//! Closed-form quantities for the AR(1)-with-noisy-proxy design: local
//! alternatives, the limiting moment covariance, expected SE/AE loss
//! differences and asymptotic local power.

use crate::ecpa::InstrumentSpec;
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::sim::DgpDraw;
use crate::stats::chi2::{chi2_quantile, noncentral_chi2_sf};
use crate::stats::cov::{quad_form, CovMatrix};
use crate::stats::normal::folded_normal_mean;
use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Signal-to-noise ratio Var(Y_t) / σ_ε̂². `NoNoise` is the noiseless proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Finite(f64),
    NoNoise,
}

impl Snr {
    pub fn finite(v: f64) -> Result<Self> {
        if !(v > 0.0) {
            return Err(Error::Argument(format!("signal-to-noise ratio must be positive, got {v}")));
        }
        if v.is_infinite() {
            return Ok(Snr::NoNoise);
        }
        Ok(Snr::Finite(v))
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Snr::Finite(v) => *v,
            Snr::NoNoise => f64::INFINITY,
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Finite(v) => write!(f, "{v}"),
            Snr::NoNoise => write!(f, "inf"),
        }
    }
}

impl FromStr for Snr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Snr::NoNoise),
            _ => {}
        }
        if let Some((a, b)) = t.split_once('/') {
            let num: f64 = a.trim().parse().map_err(|_| Error::Argument(format!("invalid SNR '{s}'")))?;
            let den: f64 = b.trim().parse().map_err(|_| Error::Argument(format!("invalid SNR '{s}'")))?;
            return Snr::finite(num / den);
        }
        let v: f64 = t.parse().map_err(|_| Error::Argument(format!("invalid SNR '{s}'")))?;
        Snr::finite(v)
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Snr::Finite(v) => s.serialize_f64(*v),
            Snr::NoNoise => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Snr::finite(v).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Loss used in the simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimLoss {
    Se,
    Ae,
}

impl SimLoss {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimLoss::Se => "se",
            SimLoss::Ae => "ae",
        }
    }

    pub fn loss(&self) -> Loss {
        match self {
            SimLoss::Se => Loss::squared_error(),
            SimLoss::Ae => Loss::AbsoluteError,
        }
    }
}

impl FromStr for SimLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "se" => Ok(SimLoss::Se),
            "ae" => Ok(SimLoss::Ae),
            other => Err(Error::Argument(format!("unknown simulation loss '{other}' (expected se or ae)"))),
        }
    }
}

/// Parameters of Y_t = μ(1−φ) + φY_{t−1} + ε_t, Ŷ_t = Y_t + ε̂_t and the two
/// competing forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub mu: f64,
    pub phi: f64,
    pub sigma_eps2: f64,
    pub sigma_hat2: f64,
    pub n: usize,
    pub xi: f64,
}

impl SimParams {
    /// μ = 1, φ = 0.2, σ_ε² = 1, noiseless proxy, n = 500, ξ = 0.
    pub fn baseline() -> Self {
        Self { mu: 1.0, phi: 0.2, sigma_eps2: 1.0, sigma_hat2: 0.0, n: 500, xi: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.abs() < 1.0) {
            return Err(Error::Argument(format!("AR coefficient must satisfy |phi| < 1, got {}", self.phi)));
        }
        if !(self.sigma_eps2 > 0.0) || !self.sigma_eps2.is_finite() {
            return Err(Error::Argument(format!("innovation variance must be positive, got {}", self.sigma_eps2)));
        }
        if !(self.sigma_hat2 >= 0.0) || !self.sigma_hat2.is_finite() {
            return Err(Error::Argument(format!("proxy noise variance must be >= 0, got {}", self.sigma_hat2)));
        }
        if self.n == 0 {
            return Err(Error::Argument("sample size must be >= 1".into()));
        }
        if !self.mu.is_finite() || !self.xi.is_finite() {
            return Err(Error::Argument("mu and xi must be finite".into()));
        }
        Ok(())
    }

    /// μ(1−φ), the bias of the second forecast.
    pub fn bias(&self) -> f64 {
        self.mu * (1.0 - self.phi)
    }

    pub fn with_snr(mut self, zeta: Snr) -> Result<Self> {
        self.sigma_hat2 = snr_to_sigma_hat2(zeta, &self)?;
        Ok(self)
    }
}

/// Var(Y_t) = σ_ε² / (1 − φ²).
pub fn stationary_variance(p: &SimParams) -> Result<f64> {
    if !(p.phi.abs() < 1.0) {
        return Err(Error::Argument(format!("AR coefficient must satisfy |phi| < 1, got {}", p.phi)));
    }
    Ok(p.sigma_eps2 / (1.0 - p.phi * p.phi))
}

/// σ_ε̂² = Var(Y_t) / ζ, zero for a noiseless proxy.
pub fn snr_to_sigma_hat2(zeta: Snr, p: &SimParams) -> Result<f64> {
    match zeta {
        Snr::NoNoise => Ok(0.0),
        Snr::Finite(z) if z > 0.0 && z.is_finite() => Ok(stationary_variance(p)? / z),
        Snr::Finite(z) => Err(Error::Argument(format!("signal-to-noise ratio must be positive, got {z}"))),
    }
}

/// E[d²(Ŷ_t, x_1t, x_2t)] for SE loss at a given σ₁².
pub fn se_second_moment(p: &SimParams, sigma1_2: f64) -> f64 {
    let m2 = p.bias() * p.bias();
    let s = p.sigma_eps2 + p.sigma_hat2;
    let t = s + sigma1_2;
    3.0 * t * t - 2.0 * m2 * t - 6.0 * s * s - 2.0 * s * sigma1_2
        + (m2 * m2 + 6.0 * m2 * s + 3.0 * s * s)
}

fn instrument_second_moments(p: &SimParams) -> Result<[[f64; 2]; 2]> {
    let v = stationary_variance(p)? + p.mu * p.mu + p.sigma_hat2;
    Ok([[1.0, p.mu], [p.mu, v]])
}

/// Limit Ω of Var(n^{-1/2} Σ Ẑ_t) under SE loss with h_{t−1} = (1, Ŷ_{t−1})':
/// c · [[1, μ], [μ, σ_ε²/(1−φ²) + μ² + σ_ε̂²]] with
/// c = 2μ⁴(1−φ)⁴ + 8μ²(1−φ)²(σ_ε² + σ_ε̂²).
pub fn omega_closed_form(p: &SimParams) -> Result<CovMatrix> {
    p.validate()?;
    let m2 = p.bias() * p.bias();
    let c = 2.0 * m2 * m2 + 8.0 * m2 * (p.sigma_eps2 + p.sigma_hat2);
    if c == 0.0 {
        log::warn!("closed-form omega is the zero matrix (mu = 0 or phi = 1)");
    }
    let m = instrument_second_moments(p)?;
    CovMatrix::from_rows(&[vec![c * m[0][0], c * m[0][1]], vec![c * m[1][0], c * m[1][1]]])
}

/// Exact finite-n Var(n^{-1/2} Σ Ẑ_t) under SE loss for a given σ₁²:
/// E[d²] · M − δδ'/n, where M is the instrument second-moment matrix.
/// Tends to [`omega_closed_form`] as σ₁² → μ²(1−φ)².
pub fn omega_finite_sample(p: &SimParams, sigma1_2: f64) -> Result<CovMatrix> {
    p.validate()?;
    let c = se_second_moment(p, sigma1_2);
    let m = instrument_second_moments(p)?;
    let mean_d = expected_se_loss_diff(p, sigma1_2);
    let mean = [mean_d, p.mu * mean_d];
    let rows: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..2).map(|j| c * m[i][j] - mean[i] * mean[j]).collect())
        .collect();
    CovMatrix::from_rows(&rows)
}

/// Local-alternative vector δ with E[h_{t−1} d_t] = δ/√n.
pub fn delta_local(loss: SimLoss, p: &SimParams) -> [f64; 2] {
    let scale = match loss {
        SimLoss::Se => 1.0,
        SimLoss::Ae => SQRT_2_OVER_PI,
    };
    [scale * p.xi, scale * p.mu * p.xi]
}

/// E[d(Y_t, x_1t, x_2t)] = σ₁² − μ²(1−φ)² under SE loss (identical for any
/// conditionally unbiased proxy).
pub fn expected_se_loss_diff(p: &SimParams, sigma1_2: f64) -> f64 {
    sigma1_2 - p.bias() * p.bias()
}

/// Expected AE loss difference. With `use_proxy` both error variances are
/// inflated by σ_ε̂²:
/// E|N(0, σ_ε² + σ_ε̂² + σ₁²)| − E|N(μ(1−φ), σ_ε² + σ_ε̂²)|.
pub fn expected_ae_loss_diff(p: &SimParams, sigma1_2: f64, use_proxy: bool) -> Result<f64> {
    if !(sigma1_2 >= 0.0) {
        return Err(Error::Argument(format!("sigma1^2 must be >= 0, got {sigma1_2}")));
    }
    let noise = if use_proxy { p.sigma_hat2 } else { 0.0 };
    let base = p.sigma_eps2 + noise;
    Ok(folded_normal_mean(0.0, (base + sigma1_2).sqrt())? - folded_normal_mean(p.bias(), base.sqrt())?)
}

/// σ₁² solving E[d(Y_t, x_1t, x_2t)] = 0 under AE loss (latent target), by
/// bisection on [0, 100].
pub fn ae_null_sigma1(p: &SimParams) -> Result<f64> {
    p.validate()?;
    let f = |s: f64| expected_ae_loss_diff(p, s, false);
    let (mut lo, mut hi) = (0.0f64, 100.0f64);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(0.0);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change of the AE loss difference on [0, 100] (f(0) = {flo}, f(100) = {fhi})"
        )));
    }
    let increasing = fhi > flo;
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// σ₁² used by the simulator: null calibration plus ξ/√n.
pub fn sigma1_for(loss: SimLoss, p: &SimParams) -> Result<f64> {
    let null = match loss {
        SimLoss::Se => p.bias() * p.bias(),
        SimLoss::Ae => {
            let latent = SimParams { sigma_hat2: 0.0, ..*p };
            ae_null_sigma1(&latent)?
        }
    };
    let s = null + p.xi / (p.n as f64).sqrt();
    if !(s >= 0.0) {
        return Err(Error::Argument(format!(
            "xi = {} gives negative forecast-noise variance {s} at n = {}",
            p.xi, p.n
        )));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub delta: Vec<f64>,
    pub omega: CovMatrix,
    pub noncentrality: f64,
    pub tau: f64,
    pub alp: f64,
}

/// Asymptotic local power P{χ²_q(δ'Ω⁻¹δ) > χ²_{q,1−τ}}.
pub fn alp(delta: &[f64], omega: &CovMatrix, tau: f64) -> Result<PowerResult> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Argument(format!("significance level must lie in (0, 1), got {tau}")));
    }
    let lambda = quad_form(omega, delta)?;
    let q = delta.len() as f64;
    let power = if lambda == 0.0 {
        tau
    } else {
        let crit = chi2_quantile(q, 1.0 - tau)?;
        noncentral_chi2_sf(q, lambda, crit)?
    };
    Ok(PowerResult {
        delta: delta.to_vec(),
        omega: omega.clone(),
        noncentrality: lambda,
        tau,
        alp: power,
    })
}

/// Empirical comparison of the moment covariance under the proxy with the one
/// under the optimal forecast x*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyVarianceReport {
    pub omega_proxy: CovMatrix,
    pub omega_star: CovMatrix,
    /// Smallest eigenvalue of omega_proxy − omega_star.
    pub min_eigenvalue: f64,
    pub mc_se: f64,
    pub draws: usize,
    pub passes: bool,
}

#[allow(clippy::needless_range_loop)]
fn draw_moment_cov(draw: &DgpDraw, target: &[f64], loss: &Loss, h: &InstrumentSpec) -> Result<DMatrix<f64>> {
    let lag = h.max_lag();
    let n = target.len();
    if lag >= n {
        return Err(Error::InsufficientData("path shorter than the instrument lag".into()));
    }
    let q = h.q();
    let mut m = DMatrix::zeros(q, q);
    let mut row = vec![0.0; q];
    for t in lag..n {
        let d = loss.difference(target[t], draw.x1[t], draw.x2[t])?;
        for (j, kind) in h.kinds().iter().enumerate() {
            row[j] = match kind {
                crate::ecpa::InstrumentKind::Constant => 1.0,
                crate::ecpa::InstrumentKind::LaggedProxy { lag } => draw.y_hat[t - lag],
                other => {
                    return Err(Error::Unsupported(format!(
                        "instrument {other} is not available for simulated draws"
                    )))
                }
            } * d;
        }
        for i in 0..q {
            for j in 0..q {
                m[(i, j)] += row[i] * row[j];
            }
        }
    }
    Ok(m / (n - lag) as f64)
}

/// Estimates Ω with the proxy and with x* as evaluation target (same
/// instruments h_{t−1} = (1, Ŷ_{t−1})') and checks that the difference is
/// positive semi-definite up to three Monte Carlo standard errors.
pub fn proxy_variance_decomposition_check(draws: &[DgpDraw], loss: &Loss) -> Result<ProxyVarianceReport> {
    if draws.len() < 2 {
        return Err(Error::Argument(format!(
            "at least two simulated draws are required, got {}",
            draws.len()
        )));
    }
    let h = InstrumentSpec::constant_and_lagged_proxy();
    let mut proxy_mats = Vec::with_capacity(draws.len());
    let mut star_mats = Vec::with_capacity(draws.len());
    for d in draws {
        proxy_mats.push(draw_moment_cov(d, &d.y_hat, loss, &h)?);
        star_mats.push(draw_moment_cov(d, &d.x_star, loss, &h)?);
    }
    let r = draws.len() as f64;
    let mean = |ms: &[DMatrix<f64>]| ms.iter().fold(DMatrix::zeros(2, 2), |acc, m| acc + m) / r;
    let omega_proxy = CovMatrix::new(mean(&proxy_mats))?;
    let omega_star = CovMatrix::new(mean(&star_mats))?;
    let diff = CovMatrix::new(omega_proxy.matrix() - omega_star.matrix())?;
    let (values, vectors) = diff.eigen();
    let v = vectors.column(0).into_owned();
    let proj: Vec<f64> = proxy_mats
        .iter()
        .zip(&star_mats)
        .map(|(a, b)| (v.transpose() * (a - b) * &v)[(0, 0)])
        .collect();
    let pm = proj.iter().sum::<f64>() / r;
    let var = proj.iter().map(|x| (x - pm) * (x - pm)).sum::<f64>() / (r - 1.0);
    let mc_se = (var / r).sqrt();
    Ok(ProxyVarianceReport {
        passes: values[0] >= -3.0 * mc_se,
        min_eigenvalue: values[0],
        mc_se,
        draws: draws.len(),
        omega_proxy,
        omega_star,
    })
}
