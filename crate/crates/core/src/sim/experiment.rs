use super::dgp::{simulate_path, DgpDraw};
use super::table::{RejectionRow, RejectionTable};
use crate::ecpa::{ecpa_statistic, EvaluationPanel, InstrumentSpec};
use crate::error::{Error, Result};
use crate::power::{alp, delta_local, omega_closed_form, sigma1_for, SimLoss, SimParams, Snr};
use crate::stats::cov::HacConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one cell key.
pub fn cell_key(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |acc, &p| splitmix64(acc ^ p))
}

/// RNG of replication `rep` in the cell identified by `key`.
pub fn rep_rng(seed: u64, key: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(key)));
    rng.set_stream(rep);
    rng
}

/// Runs `f` on a pool with `threads` workers (0 = rayon's default).
pub fn with_threads<T, F>(threads: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// One (ξ, ζ, n) cell. `params.n` is the evaluation sample size; the path is
/// extended by the instrument lag so that exactly n moments enter the test.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub params: SimParams,
    pub loss: SimLoss,
    pub instruments: InstrumentSpec,
    pub cov: HacConfig,
    pub reps: usize,
    pub tau: f64,
}

impl CellSpec {
    pub fn new(params: SimParams, loss: SimLoss, reps: usize) -> Self {
        Self {
            params,
            loss,
            instruments: InstrumentSpec::constant_and_lagged_proxy(),
            cov: HacConfig::outer_product(),
            reps,
            tau: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.reps == 0 {
            return Err(Error::Argument("replication count must be >= 1".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Argument(format!("significance level must lie in (0, 1), got {}", self.tau)));
        }
        self.instruments.validate(1)
    }

    /// Simulates the path of replication `rep`.
    pub fn draw(&self, seed: u64, key: u64, rep: usize) -> Result<DgpDraw> {
        let sigma1_2 = sigma1_for(self.loss, &self.params)?;
        let path = SimParams { n: self.params.n + self.instruments.max_lag(), ..self.params };
        simulate_path(&path, sigma1_2, &mut rep_rng(seed, key, rep as u64))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    /// Replications that produced a test result.
    pub reps: usize,
    pub failed: usize,
    pub rejections: usize,
    pub reject_freq: f64,
    pub mc_se: f64,
    /// p-values of the successful replications, in replication order.
    pub p_values: Vec<f64>,
}

/// Rejection frequency of the ECPA test at level τ over `cell.reps`
/// replications. Replications whose test errors are counted and excluded.
pub fn run_cell(cell: &CellSpec, seed: u64, key: u64) -> Result<CellOutcome> {
    cell.validate()?;
    let sigma1_2 = sigma1_for(cell.loss, &cell.params)?;
    let path = SimParams { n: cell.params.n + cell.instruments.max_lag(), ..cell.params };
    let loss = cell.loss.loss();

    let results: Vec<Result<f64>> = (0..cell.reps)
        .into_par_iter()
        .map(|rep| {
            let d = simulate_path(&path, sigma1_2, &mut rep_rng(seed, key, rep as u64))?;
            let panel = EvaluationPanel::new(d.y_hat, d.x1, d.x2)?;
            Ok(ecpa_statistic(&panel, &loss, &cell.instruments, &cell.cov)?.p_value)
        })
        .collect();

    let mut p_values = Vec::with_capacity(cell.reps);
    let mut failed = 0;
    for r in results {
        match r {
            Ok(p) => p_values.push(p),
            Err(e) => {
                log::debug!("replication failed: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        log::warn!("{failed} of {} replications failed and were excluded", cell.reps);
    }
    if p_values.is_empty() {
        return Err(Error::Numerical(format!("all {} replications failed", cell.reps)));
    }
    let rejections = p_values.iter().filter(|&&p| p < cell.tau).count();
    let valid = p_values.len();
    let f = rejections as f64 / valid as f64;
    Ok(CellOutcome {
        reps: valid,
        failed,
        rejections,
        reject_freq: f,
        mc_se: (f * (1.0 - f) / valid as f64).sqrt(),
        p_values,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub xi_grid: Vec<f64>,
    pub zeta_grid: Vec<Snr>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub tau: f64,
    pub loss: SimLoss,
    pub instruments: InstrumentSpec,
    pub cov: HacConfig,
    pub mu: f64,
    pub phi: f64,
    pub sigma_eps2: f64,
    pub seed: u64,
    /// Share innovations across ξ and ζ within the same n.
    pub common_random_numbers: bool,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            xi_grid: (-4..=4).map(f64::from).collect(),
            zeta_grid: vec![
                Snr::Finite(0.2),
                Snr::Finite(0.5),
                Snr::Finite(1.0),
                Snr::Finite(2.0),
                Snr::Finite(5.0),
                Snr::NoNoise,
            ],
            n_grid: vec![50, 100, 500],
            reps: 10_000,
            tau: 0.05,
            loss: SimLoss::Se,
            instruments: InstrumentSpec::constant_and_lagged_proxy(),
            cov: HacConfig::outer_product(),
            mu: 1.0,
            phi: 0.2,
            sigma_eps2: 1.0,
            seed: 1,
            common_random_numbers: false,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Argument("replication count must be >= 1".into()));
        }
        if self.xi_grid.is_empty() || self.zeta_grid.is_empty() || self.n_grid.is_empty() {
            return Err(Error::Argument("experiment grids must be nonempty".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Argument(format!("significance level must lie in (0, 1), got {}", self.tau)));
        }
        if self.xi_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("xi values must be finite".into()));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::Argument("sample sizes must be >= 2".into()));
        }
        self.instruments.validate(1)?;
        self.cell(0.0, self.zeta_grid[0], self.n_grid[0])?.params.validate()
    }

    pub fn cell(&self, xi: f64, zeta: Snr, n: usize) -> Result<CellSpec> {
        let base = SimParams {
            mu: self.mu,
            phi: self.phi,
            sigma_eps2: self.sigma_eps2,
            sigma_hat2: 0.0,
            n,
            xi,
        };
        Ok(CellSpec {
            params: base.with_snr(zeta)?,
            loss: self.loss,
            instruments: self.instruments.clone(),
            cov: self.cov.clone(),
            reps: self.reps,
            tau: self.tau,
        })
    }

    /// Stream key of a cell: derived from the cell's values, so adding grid
    /// points leaves the other cells' draws unchanged.
    pub fn key(&self, xi: f64, zeta: Snr, n: usize) -> u64 {
        let loss = match self.loss {
            SimLoss::Se => 1,
            SimLoss::Ae => 2,
        };
        if self.common_random_numbers {
            cell_key(&[loss, n as u64])
        } else {
            cell_key(&[loss, xi.to_bits(), zeta.as_f64().to_bits(), n as u64])
        }
    }

    /// Cells in table order: ζ, then n, then ξ.
    pub fn cells(&self) -> Vec<(f64, Snr, usize)> {
        let mut out = Vec::new();
        for &z in &self.zeta_grid {
            for &n in &self.n_grid {
                for &x in &self.xi_grid {
                    out.push((x, z, n));
                }
            }
        }
        out
    }
}

fn alp_overlay(cell: &CellSpec) -> Option<f64> {
    if cell.loss != SimLoss::Se || cell.instruments != InstrumentSpec::constant_and_lagged_proxy() {
        return None;
    }
    let omega = omega_closed_form(&cell.params).ok()?;
    match alp(&delta_local(SimLoss::Se, &cell.params), &omega, cell.tau) {
        Ok(r) => Some(r.alp),
        Err(e) => {
            log::warn!("no ALP overlay for xi = {}: {e}", cell.params.xi);
            None
        }
    }
}

/// Runs every cell of the grid. The table is bit-identical for a given grid
/// and seed regardless of the number of workers.
pub fn run_grid(grid: &ExperimentGrid) -> Result<RejectionTable> {
    grid.validate()?;
    let cells = grid.cells();
    let total = cells.len();
    let rows: Vec<Result<RejectionRow>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(xi, zeta, n))| {
            let spec = grid.cell(xi, zeta, n)?;
            let out = run_cell(&spec, grid.seed, grid.key(xi, zeta, n))?;
            log::info!(
                "cell {}/{total}: loss={} xi={xi} zeta={zeta} n={n} reject={}",
                i + 1,
                grid.loss.as_str(),
                out.reject_freq
            );
            Ok(RejectionRow {
                loss: grid.loss,
                xi,
                zeta,
                n,
                reps: out.reps,
                reject_freq: out.reject_freq,
                mc_se: out.mc_se,
                alp: alp_overlay(&spec),
            })
        })
        .collect();
    Ok(RejectionTable { rows: rows.into_iter().collect::<Result<_>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replication_is_zero_or_one() {
        let cell = CellSpec::new(SimParams { n: 100, ..SimParams::baseline() }, SimLoss::Se, 1);
        let out = run_cell(&cell, 9, 0).unwrap();
        assert!(out.reject_freq == 0.0 || out.reject_freq == 1.0);
        assert_eq!(out.p_values.len(), 1);
    }

    #[test]
    fn zero_reps_rejected() {
        let grid = ExperimentGrid { reps: 0, ..Default::default() };
        assert!(matches!(run_grid(&grid), Err(Error::Argument(_))));
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let grid = ExperimentGrid {
            xi_grid: vec![0.0, 3.0],
            zeta_grid: vec![Snr::Finite(1.0), Snr::NoNoise],
            n_grid: vec![60],
            reps: 40,
            seed: 17,
            ..Default::default()
        };
        let a = with_threads(1, || run_grid(&grid)).unwrap().unwrap();
        let b = with_threads(3, || run_grid(&grid)).unwrap().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 4);
        assert!(a.rows.iter().all(|r| r.alp.is_some()));
    }

    #[test]
    fn ae_rows_have_no_overlay() {
        let grid = ExperimentGrid {
            xi_grid: vec![0.0],
            zeta_grid: vec![Snr::NoNoise],
            n_grid: vec![50],
            reps: 5,
            loss: SimLoss::Ae,
            ..Default::default()
        };
        let t = run_grid(&grid).unwrap();
        assert_eq!(t.rows[0].alp, None);
    }

    #[test]
    fn crn_shares_latent_path() {
        let grid = ExperimentGrid { common_random_numbers: true, ..Default::default() };
        let a = grid.cell(0.0, Snr::Finite(1.0), 80).unwrap();
        let b = grid.cell(0.0, Snr::NoNoise, 80).unwrap();
        let ka = grid.key(0.0, Snr::Finite(1.0), 80);
        let kb = grid.key(0.0, Snr::NoNoise, 80);
        assert_eq!(ka, kb);
        assert_eq!(a.draw(5, ka, 3).unwrap().y, b.draw(5, kb, 3).unwrap().y);
        let indep = ExperimentGrid::default();
        assert_ne!(indep.key(0.0, Snr::Finite(1.0), 80), indep.key(0.0, Snr::NoNoise, 80));
    }
}
