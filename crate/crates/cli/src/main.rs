#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use ecpa::ecpa::{ecpa_statistic, instrument_presets_proxycheck, proxy_unbiasedness_test, InstrumentSpec};
use ecpa::io::{read_panel_path, CsvColumns, RunConfig};
use ecpa::loss::{expected_dld_quantile, DistSpec, Interval, QuantileLossSpec};
use ecpa::power::{
    ae_null_sigma1, alp, delta_local, expected_ae_loss_diff, expected_se_loss_diff, omega_closed_form,
    sigma1_for, SimLoss, SimParams, Snr,
};
use ecpa::sim::{run_grid, with_threads, write_table};
use ecpa::{Error, ErrorClass, Result};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ecpa", version, about = "Equal conditional predictive ability tests with proxy targets")]
struct Cli {
    /// Run configuration file (flat `key = value`); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ECPA test on a CSV panel with proxy, forecast1 and forecast2 columns.
    Test(TestArgs),
    /// Conditional unbiasedness of one proxy against another.
    ProxyCheck(ProxyArgs),
    /// Asymptotic local power in the AR(1) design.
    Power(PowerArgs),
    /// Rejection-frequency experiments over a (xi, zeta, n) grid.
    Simulate(SimArgs),
    /// Expected difference of loss differences for a quantile loss.
    Dld(DldArgs),
}

#[derive(Args, Debug, Default)]
struct TestOptions {
    /// se | qlike | quantile
    #[arg(long)]
    loss: Option<String>,
    /// Quantile level for --loss quantile.
    #[arg(long)]
    alpha: Option<f64>,
    /// Instrument list, e.g. "constant,lag_proxy(1),lag_extra(rv,1)".
    #[arg(long)]
    instruments: Option<String>,
    /// Lag used where an instrument omits one (default: horizon).
    #[arg(long)]
    lag: Option<usize>,
    /// HAC truncation lag (default: horizon - 1).
    #[arg(long)]
    bandwidth: Option<usize>,
    /// bartlett | uniform
    #[arg(long)]
    weights: Option<String>,
    /// Forecast horizon h; sets the default lag and bandwidth
    #[arg(long)]
    horizon: Option<usize>,
    /// Significance level
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Panel CSV file.
    panel: PathBuf,
    #[command(flatten)]
    opts: TestOptions,
}

#[derive(Args, Debug)]
struct ProxyArgs {
    /// First proxy as FILE:COLUMN.
    #[arg(long)]
    a: String,
    /// Second proxy as FILE:COLUMN.
    #[arg(long)]
    b: String,
    /// Instrument preset 1-5 or "all".
    #[arg(long, conflicts_with = "instruments")]
    preset: Option<String>,
    /// Custom instruments; refer to the proxies as proxy_a and proxy_b.
    #[arg(long)]
    instruments: Option<String>,
    #[arg(long, default_value_t = 1)]
    lag: usize,
    /// Significance level
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct PowerArgs {
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.2)]
    phi: f64,
    #[arg(long = "sigma-eps2", default_value_t = 1.0)]
    sigma_eps2: f64,
    /// Signal-to-noise ratio; "inf" for a noiseless proxy.
    #[arg(long, default_value = "inf")]
    zeta: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    xi: f64,
    /// Significance level
    #[arg(long)]
    tau: Option<f64>,
    /// se | ae
    #[arg(long, default_value = "se")]
    loss: String,
    /// Sample size for the expected-loss-difference output.
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Report expected loss differences only (required for ae).
    #[arg(long)]
    expectations: bool,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Significance level
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct DldArgs {
    /// Law of the target: gaussian:MEAN,VAR | empirical:FILE:COLUMN | tabulated:FILE (columns x,cdf).
    #[arg(long)]
    f: String,
    /// Law of the proxy, same syntax as --f.
    #[arg(long = "f-hat")]
    f_hat: String,
    #[arg(long, allow_hyphen_values = true)]
    x1: f64,
    #[arg(long, allow_hyphen_values = true)]
    x2: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// identity | exp | cube | log
    #[arg(long, default_value = "identity")]
    g: String,
    /// Lower end of the loss support (truncation point for gaussian laws).
    #[arg(long, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, allow_hyphen_values = true)]
    hi: f64,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_path(p),
        None => Ok(RunConfig::default()),
    }
}

fn apply_test_options(cfg: &mut RunConfig, o: &TestOptions) -> Result<()> {
    let pairs: [(&str, Option<String>); 8] = [
        ("loss.kind", o.loss.clone()),
        ("loss.alpha", o.alpha.map(|v| v.to_string())),
        ("instruments.set", o.instruments.clone()),
        ("instruments.lag", o.lag.map(|v| v.to_string())),
        ("covariance.bandwidth", o.bandwidth.map(|v| v.to_string())),
        ("covariance.weights", o.weights.clone()),
        ("run.horizon", o.horizon.map(|v| v.to_string())),
        ("run.tau", o.tau.map(|v| v.to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    Ok(())
}

fn cmd_test(cfg: &mut RunConfig, args: &TestArgs) -> Result<Value> {
    apply_test_options(cfg, &args.opts)?;
    let panel = read_panel_path(&args.panel)?.with_horizon(cfg.horizon)?;
    let spec = cfg.instrument_spec()?;
    spec.validate(cfg.horizon)?;
    let loss = cfg.loss_kind.build(cfg.loss_alpha, &panel)?;
    let hac = cfg.hac();
    let r = ecpa_statistic(&panel, &loss, &spec, &hac)?;
    let reject = r.p_value < cfg.tau;
    let mut out = serde_json::to_value(&r)?;
    out["reject"] = json!(reject);
    out["settings"] = json!({
        "loss": loss.name(),
        "instruments": spec.names(),
        "bandwidth": hac.bandwidth,
        "weights": hac.weights,
        "horizon": cfg.horizon,
        "tau": cfg.tau,
        "n": panel.len(),
    });
    Ok(out)
}

fn read_column(spec: &str) -> Result<Vec<f64>> {
    let (file, col) = spec
        .rsplit_once(':')
        .ok_or_else(|| Error::Argument(format!("expected FILE:COLUMN, got '{spec}'")))?;
    CsvColumns::from_path(Path::new(file))?.numeric(col)
}

fn cmd_proxy_check(cfg: &mut RunConfig, args: &ProxyArgs) -> Result<Value> {
    if let Some(t) = args.tau {
        cfg.set("run.tau", &t.to_string())?;
    }
    let a = read_column(&args.a)?;
    let b = read_column(&args.b)?;
    let sets: Vec<(Value, InstrumentSpec)> = match (&args.preset, &args.instruments) {
        (_, Some(s)) => vec![(json!("custom"), InstrumentSpec::parse(s, args.lag)?)],
        (None, None) => vec![(json!(1), instrument_presets_proxycheck().remove(0))],
        (Some(p), None) if p.eq_ignore_ascii_case("all") => instrument_presets_proxycheck()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (json!(i + 1), s))
            .collect(),
        (Some(p), None) => {
            let i: usize = p
                .parse()
                .ok()
                .filter(|i| (1..=5).contains(i))
                .ok_or_else(|| Error::Argument(format!("preset must be 1-5 or all, got '{p}'")))?;
            vec![(json!(i), instrument_presets_proxycheck().remove(i - 1))]
        }
    };
    let mut rows = Vec::new();
    for (label, spec) in sets {
        let r = proxy_unbiasedness_test(&a, &b, &spec)?;
        rows.push(json!({
            "preset": label,
            "instruments": r.instruments,
            "statistic": r.statistic,
            "df": r.df,
            "p_value": r.p_value,
            "n_effective": r.n_effective,
            "reject": r.p_value < cfg.tau,
        }));
    }
    Ok(json!({ "a": args.a, "b": args.b, "tau": cfg.tau, "rows": rows }))
}

fn cmd_power(cfg: &mut RunConfig, args: &PowerArgs) -> Result<Value> {
    if let Some(t) = args.tau {
        cfg.set("run.tau", &t.to_string())?;
    }
    let loss: SimLoss = args.loss.parse()?;
    let zeta: Snr = args.zeta.parse()?;
    let p = SimParams {
        mu: args.mu,
        phi: args.phi,
        sigma_eps2: args.sigma_eps2,
        sigma_hat2: 0.0,
        n: args.n,
        xi: args.xi,
    }
    .with_snr(zeta)?;
    p.validate()?;
    let delta = delta_local(loss, &p);
    if args.expectations {
        let s1 = sigma1_for(loss, &p)?;
        let (latent, proxy) = match loss {
            SimLoss::Se => (expected_se_loss_diff(&p, s1), expected_se_loss_diff(&p, s1)),
            SimLoss::Ae => (expected_ae_loss_diff(&p, s1, false)?, expected_ae_loss_diff(&p, s1, true)?),
        };
        let null_s1 = match loss {
            SimLoss::Se => p.bias() * p.bias(),
            SimLoss::Ae => ae_null_sigma1(&SimParams { sigma_hat2: 0.0, ..p })?,
        };
        return Ok(json!({
            "loss": loss.as_str(),
            "zeta": zeta,
            "sigma_hat2": p.sigma_hat2,
            "sigma1_2_null": null_s1,
            "sigma1_2": s1,
            "delta": delta,
            "expected_loss_diff_target": latent,
            "expected_loss_diff_proxy": proxy,
        }));
    }
    if loss == SimLoss::Ae {
        return Err(Error::Unsupported(
            "no closed-form moment covariance exists for AE loss in this design; \
             use --expectations for expected loss differences"
                .into(),
        ));
    }
    let omega = omega_closed_form(&p)?;
    let r = alp(&delta, &omega, cfg.tau)?;
    Ok(json!({
        "loss": loss.as_str(),
        "zeta": zeta,
        "delta": r.delta,
        "omega": r.omega,
        "lambda": r.noncentrality,
        "tau": r.tau,
        "alp": r.alp,
    }))
}

fn worker_threads() -> Result<usize> {
    match std::env::var("ECPA_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("ECPA_THREADS must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

fn cmd_simulate(cfg: &mut RunConfig, args: &SimArgs) -> Result<()> {
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.reps {
        cfg.sim_reps = r;
    }
    if let Some(t) = args.tau {
        cfg.set("run.tau", &t.to_string())?;
    }
    if let Some(f) = &args.format {
        cfg.output_format = f.parse()?;
    }
    if let Some(o) = &args.out {
        cfg.output_path = Some(o.clone());
    }
    let grid = cfg.experiment_grid()?;
    let threads = worker_threads()?;
    log::info!(
        "simulating {} cells x {} replications (seed {})",
        grid.cells().len(),
        grid.reps,
        grid.seed
    );
    let table = with_threads(threads, || run_grid(&grid))??;
    match &cfg.output_path {
        Some(path) => {
            let f = std::fs::File::create(path)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            let mut w = std::io::BufWriter::new(f);
            write_table(&table, cfg.output_format, &mut w)?;
            w.flush()?;
            log::info!("wrote {} rows to {}", table.rows.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_table(&table, cfg.output_format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn parse_dist(s: &str, lo: f64, hi: f64) -> Result<DistSpec> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::Argument(format!("expected KIND:ARGS for a distribution, got '{s}'")))?;
    match kind {
        "gaussian" => {
            let (m, v) = rest
                .split_once(',')
                .ok_or_else(|| Error::Argument(format!("expected gaussian:MEAN,VAR, got '{s}'")))?;
            let num = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Argument(format!("invalid number '{x}' in '{s}'")))
            };
            DistSpec::truncated_gaussian(num(m)?, num(v)?, lo, hi)
        }
        "empirical" => DistSpec::empirical(read_column(rest)?),
        "tabulated" => {
            let cols = CsvColumns::from_path(Path::new(rest))?;
            DistSpec::tabulated(cols.numeric("x")?, cols.numeric("cdf")?)
        }
        other => Err(Error::Argument(format!(
            "unsupported distribution kind '{other}' (expected gaussian, empirical or tabulated)"
        ))),
    }
}

fn quantile_spec(alpha: f64, g: &str, support: Interval) -> Result<QuantileLossSpec> {
    match g {
        "identity" => QuantileLossSpec::pinball(alpha, support),
        "exp" => QuantileLossSpec::new(alpha, "exp", f64::exp, support),
        "cube" => QuantileLossSpec::new(alpha, "cube", |x| x * x * x, support),
        "log" => {
            if !(support.lo > 0.0) {
                return Err(Error::Argument("g = log needs a positive support".into()));
            }
            QuantileLossSpec::new(alpha, "log", f64::ln, support)
        }
        other => Err(Error::Argument(format!(
            "unknown transform '{other}' (expected identity, exp, cube or log)"
        ))),
    }
}

fn cmd_dld(args: &DldArgs) -> Result<Value> {
    if !(args.lo < args.hi) {
        return Err(Error::Argument(format!("--lo must be below --hi, got [{}, {}]", args.lo, args.hi)));
    }
    let support = Interval::closed(args.lo, args.hi);
    let f = parse_dist(&args.f, args.lo, args.hi)?;
    let f_hat = parse_dist(&args.f_hat, args.lo, args.hi)?;
    let spec = quantile_spec(args.alpha, &args.g, support)?;
    let v = expected_dld_quantile(&f, &f_hat, args.x1, args.x2, &spec)?;
    Ok(json!({
        "expected_dld": v,
        "x1": args.x1,
        "x2": args.x2,
        "alpha": args.alpha,
        "g": args.g,
        "support": [args.lo, args.hi],
    }))
}

fn run(cli: Cli) -> Result<Option<Value>> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Test(a) => cmd_test(&mut cfg, a).map(Some),
        Command::ProxyCheck(a) => cmd_proxy_check(&mut cfg, a).map(Some),
        Command::Power(a) => cmd_power(&mut cfg, a).map(Some),
        Command::Simulate(a) => cmd_simulate(&mut cfg, a).map(|_| None),
        Command::Dld(a) => cmd_dld(a).map(Some),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Some(v)) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => EXIT_USAGE,
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            })
        }
    }
}
