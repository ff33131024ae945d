//! Wald-type test of equal (conditional) predictive ability.

use super::instruments::{
    instrument_matrix, loss_differences, InstrumentSource, InstrumentSpec, PROXY_A, PROXY_B,
};
use super::panel::EvaluationPanel;
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::stats::cov::{check_positive_definite, hac_covariance, quad_form, CovMatrix, HacConfig, HacWeights};
use crate::stats::chi2::noncentral_chi2_sf;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Outcome of one ECPA (or proxy-unbiasedness) test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcpaResult {
    pub n_effective: usize,
    pub q: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub mean_moment: Vec<f64>,
    pub covariance: CovMatrix,
    pub cov_method: String,
    pub psd_repair_flag: bool,
    pub instruments: Vec<String>,
}

fn describe_cov(cfg: &HacConfig) -> String {
    if cfg.bandwidth == 0 {
        return "outer_product".into();
    }
    let w = match &cfg.weights {
        HacWeights::Bartlett => "bartlett",
        HacWeights::Uniform => "uniform",
        HacWeights::Custom(_) => "custom",
    };
    format!("hac({w},m={})", cfg.bandwidth)
}

/// Shared core: Z_t = h_{t-1} · base_t, Ω̂ from `cov`, T = n · Z̄'Ω̂⁻¹Z̄.
fn wald(src: &InstrumentSource<'_>, spec: &InstrumentSpec, cov: &HacConfig) -> Result<EcpaResult> {
    let h = instrument_matrix(src, spec)?;
    let n_eff = h.n_effective();
    let q = spec.q();
    let base = &src.base[h.offset..];

    if base.iter().all(|&d| d == 0.0) {
        return Err(Error::DegenerateMoment(
            "the moment base is identically zero, so its covariance is singular".into(),
        ));
    }
    if n_eff <= q {
        return Err(Error::InsufficientData(format!(
            "{n_eff} usable observations for {q} instruments"
        )));
    }

    let z = DMatrix::from_fn(n_eff, q, |t, j| h.values[(t, j)] * base[t]);
    let est = hac_covariance(&z, cov)?;
    let mean: Vec<f64> = (0..q).map(|j| z.column(j).sum() / n_eff as f64).collect();

    if let Err((condition, v)) = check_positive_definite(&est.covariance) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let culprits: Vec<&str> = v
            .iter()
            .zip(&h.names)
            .filter(|(w, _)| w.abs() / norm > 0.1)
            .map(|(_, n)| n.as_str())
            .collect();
        return Err(Error::Singular {
            condition,
            detail: format!(
                "moment covariance is singular; near-collinear instruments: [{}]",
                culprits.join(", ")
            ),
        });
    }

    let statistic = n_eff as f64 * quad_form(&est.covariance, &mean)?;
    let p_value = noncentral_chi2_sf(q as f64, 0.0, statistic)?;
    Ok(EcpaResult {
        n_effective: n_eff,
        q,
        statistic,
        df: q,
        p_value,
        mean_moment: mean,
        covariance: est.covariance,
        cov_method: describe_cov(cov),
        psd_repair_flag: est.psd_repaired,
        instruments: h.names,
    })
}

/// ECPA test on a forecast-comparison panel.
pub fn ecpa_statistic(
    panel: &EvaluationPanel,
    loss: &Loss,
    instruments: &InstrumentSpec,
    cov: &HacConfig,
) -> Result<EcpaResult> {
    let d = loss_differences(panel, loss)?;
    let src = InstrumentSource {
        proxy: panel.proxy(),
        base: &d,
        extras: panel.extras(),
        horizon: panel.horizon(),
    };
    wald(&src, instruments, cov)
}

/// Tests E[A_t − B_t | F_{t-1}] = 0 for two proxies of the same target.
///
/// Under the null the differences form a martingale difference sequence, so
/// the outer-product covariance is used. Instruments refer to the proxies as
/// [`PROXY_A`] and [`PROXY_B`]; `lag_proxy` refers to proxy A.
pub fn proxy_unbiasedness_test(
    proxy_a: &[f64],
    proxy_b: &[f64],
    instruments: &InstrumentSpec,
) -> Result<EcpaResult> {
    if proxy_a.len() != proxy_b.len() {
        return Err(Error::Argument(format!(
            "proxy series lengths differ ({} vs {})",
            proxy_a.len(),
            proxy_b.len()
        )));
    }
    for (name, s) in [(PROXY_A, proxy_a), (PROXY_B, proxy_b)] {
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data {
                row: i + 1,
                column: name.into(),
                message: format!("non-finite value {}", s[i]),
            });
        }
    }
    let diff: Vec<f64> = proxy_a.iter().zip(proxy_b).map(|(a, b)| a - b).collect();
    let extras = vec![
        (PROXY_A.to_string(), proxy_a.to_vec()),
        (PROXY_B.to_string(), proxy_b.to_vec()),
    ];
    let src = InstrumentSource { proxy: proxy_a, base: &diff, extras: &extras, horizon: 1 };
    wald(&src, instruments, &HacConfig::outer_product())
}
