//! Flat `key = value` run configuration with dotted namespaces.
//!
//! Lines starting with `#` and blank lines are ignored. Unknown and repeated
//! keys are rejected. Lists are comma separated; numeric lists also accept
//! `start:stop:step` ranges (inclusive).

use crate::ecpa::{EvaluationPanel, InstrumentSpec};
use crate::error::{Error, Result};
use crate::loss::{BregmanSpec, Interval, Loss, QuantileLossSpec};
use crate::power::{SimLoss, Snr};
use crate::sim::{ExperimentGrid, TableFormat};
use crate::stats::cov::{HacConfig, HacWeights};
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Every accepted key with its default and a short description.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("loss.kind", "se", "se | qlike | quantile"),
    ("loss.alpha", "0.5", "quantile level for loss.kind = quantile"),
    ("instruments.set", "constant,lag_proxy", "ordered instrument list"),
    ("instruments.lag", "horizon", "lag used where an instrument omits one"),
    ("covariance.bandwidth", "horizon - 1", "HAC truncation lag m"),
    ("covariance.weights", "bartlett", "bartlett | uniform"),
    ("run.horizon", "1", "forecast horizon"),
    ("run.tau", "0.05", "significance level"),
    ("run.seed", "1", "simulation seed (64-bit)"),
    ("sim.loss", "se", "se | ae"),
    ("sim.xi", "-4:4:1", "local-alternative grid"),
    ("sim.zeta", "1/5,1/2,1,2,5,inf", "signal-to-noise grid"),
    ("sim.n", "50,100,500", "sample sizes"),
    ("sim.reps", "10000", "replications per cell"),
    ("sim.mu", "1", "unconditional mean"),
    ("sim.phi", "0.2", "AR coefficient"),
    ("sim.sigma_eps2", "1", "innovation variance"),
    ("sim.common_random_numbers", "false", "share innovations across xi and zeta"),
    ("output.format", "csv", "csv | json"),
    ("output.path", "stdout", "table destination"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelLossKind {
    Se,
    Qlike,
    Quantile,
}

impl FromStr for PanelLossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "se" => Ok(PanelLossKind::Se),
            "qlike" => Ok(PanelLossKind::Qlike),
            "quantile" => Ok(PanelLossKind::Quantile),
            other => Err(Error::Argument(format!("unknown loss '{other}' (expected se, qlike or quantile)"))),
        }
    }
}

impl PanelLossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PanelLossKind::Se => "se",
            PanelLossKind::Qlike => "qlike",
            PanelLossKind::Quantile => "quantile",
        }
    }

    /// Loss for a panel. The quantile loss is supported on the closed hull of
    /// all proxy and forecast values.
    pub fn build(&self, alpha: f64, panel: &EvaluationPanel) -> Result<Loss> {
        Ok(match self {
            PanelLossKind::Se => Loss::Bregman(BregmanSpec::squared_error(1)),
            PanelLossKind::Qlike => Loss::Bregman(BregmanSpec::qlike(1)),
            PanelLossKind::Quantile => {
                let all = panel.proxy().iter().chain(panel.forecast1()).chain(panel.forecast2());
                let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
                Loss::Quantile(QuantileLossSpec::pinball(alpha, Interval::closed(lo, hi))?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Bartlett,
    Uniform,
}

impl FromStr for WeightKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bartlett" => Ok(WeightKind::Bartlett),
            "uniform" => Ok(WeightKind::Uniform),
            other => Err(Error::Argument(format!("unknown HAC weights '{other}' (expected bartlett or uniform)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub loss_kind: PanelLossKind,
    pub loss_alpha: f64,
    pub instruments: Option<String>,
    pub instrument_lag: Option<usize>,
    pub bandwidth: Option<usize>,
    pub weights: WeightKind,
    pub horizon: usize,
    pub tau: f64,
    pub seed: u64,
    pub sim_loss: SimLoss,
    pub sim_xi: Vec<f64>,
    pub sim_zeta: Vec<Snr>,
    pub sim_n: Vec<usize>,
    pub sim_reps: usize,
    pub sim_mu: f64,
    pub sim_phi: f64,
    pub sim_sigma_eps2: f64,
    pub sim_crn: bool,
    pub output_format: TableFormat,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = ExperimentGrid::default();
        Self {
            loss_kind: PanelLossKind::Se,
            loss_alpha: 0.5,
            instruments: None,
            instrument_lag: None,
            bandwidth: None,
            weights: WeightKind::Bartlett,
            horizon: 1,
            tau: 0.05,
            seed: 1,
            sim_loss: SimLoss::Se,
            sim_xi: grid.xi_grid,
            sim_zeta: grid.zeta_grid,
            sim_n: grid.n_grid,
            sim_reps: grid.reps,
            sim_mu: grid.mu,
            sim_phi: grid.phi,
            sim_sigma_eps2: grid.sigma_eps2,
            sim_crn: false,
            output_format: TableFormat::Csv,
            output_path: None,
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Argument(format!("invalid value '{v}' for {key}")))
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(key: &str, v: &str, f: F) -> Result<Vec<T>> {
    let out = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::Argument(format!("{key} must not be empty")));
    }
    Ok(out)
}

/// Comma list of reals or an inclusive `start:stop:step` range.
pub fn parse_real_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let [a, b, step] = [parts[0], parts[1], parts[2]].map(|p| parse_scalar::<f64>(key, p));
        let (a, b, step) = (a?, b?, step?);
        if !(step > 0.0) || b < a || !a.is_finite() || !b.is_finite() {
            return Err(Error::Argument(format!("invalid range '{v}' for {key}")));
        }
        let k = ((b - a) / step + 1e-9).floor() as usize;
        if k > 1_000_000 {
            return Err(Error::Argument(format!("range '{v}' for {key} is too long")));
        }
        return Ok((0..=k).map(|i| a + i as f64 * step).collect());
    }
    if parts.len() != 1 {
        return Err(Error::Argument(format!("invalid range '{v}' for {key}")));
    }
    parse_list(key, v, |s| parse_scalar(key, s))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Argument(format!("invalid boolean '{v}' for {key}"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Argument(format!("config line {}: expected 'key = value', got '{line}'", i + 1))
            })?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::Argument(format!("config line {}: key '{k}' given twice", i + 1)));
            }
            cfg.set(k, v.trim())
                .map_err(|e| Error::Argument(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "loss.kind" => self.loss_kind = v.parse()?,
            "loss.alpha" => self.loss_alpha = parse_scalar(key, v)?,
            "instruments.set" => self.instruments = Some(v.to_string()),
            "instruments.lag" => self.instrument_lag = Some(parse_scalar(key, v)?),
            "covariance.bandwidth" => {
                self.bandwidth = if v.eq_ignore_ascii_case("auto") { None } else { Some(parse_scalar(key, v)?) }
            }
            "covariance.weights" => self.weights = v.parse()?,
            "run.horizon" => self.horizon = parse_scalar(key, v)?,
            "run.tau" => self.tau = parse_scalar(key, v)?,
            "run.seed" => self.seed = parse_scalar(key, v)?,
            "sim.loss" => self.sim_loss = v.parse()?,
            "sim.xi" => self.sim_xi = parse_real_grid(key, v)?,
            "sim.zeta" => self.sim_zeta = parse_list(key, v, str::parse)?,
            "sim.n" => self.sim_n = parse_list(key, v, |s| parse_scalar(key, s))?,
            "sim.reps" => self.sim_reps = parse_scalar(key, v)?,
            "sim.mu" => self.sim_mu = parse_scalar(key, v)?,
            "sim.phi" => self.sim_phi = parse_scalar(key, v)?,
            "sim.sigma_eps2" => self.sim_sigma_eps2 = parse_scalar(key, v)?,
            "sim.common_random_numbers" => self.sim_crn = parse_bool(key, v)?,
            "output.format" => self.output_format = v.parse()?,
            "output.path" => {
                self.output_path = if v.is_empty() || v == "stdout" { None } else { Some(PathBuf::from(v)) }
            }
            other => return Err(Error::Argument(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn default_lag(&self) -> usize {
        self.instrument_lag.unwrap_or(self.horizon)
    }

    pub fn instrument_spec(&self) -> Result<InstrumentSpec> {
        let text = self.instruments.as_deref().unwrap_or("constant,lag_proxy");
        InstrumentSpec::parse(text, self.default_lag())
    }

    pub fn hac(&self) -> HacConfig {
        HacConfig {
            bandwidth: self.bandwidth.unwrap_or(self.horizon.saturating_sub(1)),
            weights: match self.weights {
                WeightKind::Bartlett => HacWeights::Bartlett,
                WeightKind::Uniform => HacWeights::Uniform,
            },
        }
    }

    pub fn experiment_grid(&self) -> Result<ExperimentGrid> {
        let grid = ExperimentGrid {
            xi_grid: self.sim_xi.clone(),
            zeta_grid: self.sim_zeta.clone(),
            n_grid: self.sim_n.clone(),
            reps: self.sim_reps,
            tau: self.tau,
            loss: self.sim_loss,
            instruments: match &self.instruments {
                Some(s) => InstrumentSpec::parse(s, self.default_lag())?,
                None => InstrumentSpec::constant_and_lagged_proxy(),
            },
            cov: HacConfig::outer_product(),
            mu: self.sim_mu,
            phi: self.sim_phi,
            sigma_eps2: self.sim_sigma_eps2,
            seed: self.seed,
            common_random_numbers: self.sim_crn,
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_key_table() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.tau, 0.05);
        assert_eq!(cfg.sim_reps, 10_000);
        assert_eq!(cfg.sim_xi.len(), 9);
        assert_eq!(cfg.sim_zeta.len(), 6);
        assert_eq!(cfg.hac(), HacConfig::outer_product());
        assert_eq!(cfg.instrument_spec().unwrap(), InstrumentSpec::constant_and_lagged_proxy());
        assert_eq!(CONFIG_KEYS.len(), 20);
        let mut probe = RunConfig::default();
        for (k, d, _) in CONFIG_KEYS {
            let v = match *d {
                "horizon" => "1",
                "horizon - 1" => "auto",
                other => other,
            };
            probe.set(k, v).unwrap();
        }
        assert_eq!(probe.instrument_lag, Some(1));
        probe.instrument_lag = None;
        probe.instruments = None;
        assert_eq!(probe, RunConfig::default());
    }

    #[test]
    fn parses_keys() {
        let text = "# grid\nsim.xi = -2:2:1\nsim.zeta = 2, inf\nsim.n = 100\nrun.seed = 42\n\noutput.format = json\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.sim_xi, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(cfg.sim_zeta, vec![Snr::Finite(2.0), Snr::NoNoise]);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.output_format, TableFormat::Json);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(RunConfig::parse("sim.foo = 1").is_err());
        assert!(RunConfig::parse("run.tau = 0.1\nrun.tau = 0.2").is_err());
        assert!(RunConfig::parse("just text").is_err());
        let err = RunConfig::parse("run.tau = 0.1\nsim.n = x").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn horizon_drives_defaults() {
        let cfg = RunConfig::parse("run.horizon = 3").unwrap();
        assert_eq!(cfg.hac(), HacConfig::bartlett(2));
        assert_eq!(cfg.instrument_spec().unwrap().max_lag(), 3);
    }
}
