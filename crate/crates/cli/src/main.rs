mod config;

use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use lorentz_embed::embedding::{measure_distortion_with, test_directions, DistortionOptions, GaussianMatrix, TestMode};
use lorentz_embed::ledger::{self, ConstantLedger};
use lorentz_embed::montecarlo::calibrate::{
    calibrate_dimension, calibrate_tail, calibrate_two_sided, AnalyticLemma, DimensionCalibration, LemmaPoint,
};
use lorentz_embed::montecarlo::{
    concentration_tail, estimate_median_norm, scaling_probe, verify_embedding, verify_orderorder,
    verify_schechtman_uniform,
};
use lorentz_embed::regime::{bound_report, classify_case, corollary_dimension_rp, general_dimension, ReportOptions};
use lorentz_embed::sharp::dispatch_case;
use lorentz_embed::{Error, RandomStream};
use serde::Serialize;
use serde_json::{json, Value};

use config::{missing, ExperimentConfig};

const THREADS_VAR: &str = "LORENTZ_EMBED_THREADS";

#[derive(Parser)]
#[command(name = "lorentz-embed", version, about = "Random embeddings into Lorentz sequence spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every applicable embedding-dimension bound.
    Bound(ExperimentConfig),
    /// Place (r, p) in the regime diagram and the auxiliary-norm case table.
    Classify(ExperimentConfig),
    /// Measure the distortion of one random Gaussian embedding.
    Simulate(ExperimentConfig),
    /// Monte Carlo check of one inequality or event.
    Verify(ExperimentConfig),
    /// Fit a ledger constant on one stream and validate it on another.
    Calibrate(ExperimentConfig),
    /// Estimate the exponent of k*(eps).
    Probe(ExperimentConfig),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bound(_) => "bound",
            Command::Classify(_) => "classify",
            Command::Simulate(_) => "simulate",
            Command::Verify(_) => "verify",
            Command::Calibrate(_) => "calibrate",
            Command::Probe(_) => "probe",
        }
    }

    fn flags(&self) -> &ExperimentConfig {
        match self {
            Command::Bound(c)
            | Command::Classify(c)
            | Command::Simulate(c)
            | Command::Verify(c)
            | Command::Calibrate(c)
            | Command::Probe(c) => c,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing input; exit code 1.
    Usage(String),
    /// A checked property failed; exit code 2.
    Assertion(String),
    /// I/O and other failures; exit code 1.
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Unsatisfiable(_) => CliError::Assertion(e.to_string()),
            Error::NotInRange { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Result of a command: the report body and whether its check passed.
struct Outcome {
    result: Value,
    failure: Option<String>,
}

impl Outcome {
    fn ok(result: impl Serialize) -> Result<Self, CliError> {
        Ok(Outcome { result: to_value(result)?, failure: None })
    }
}

fn to_value(v: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Runtime(e.to_string()))
}

fn progress(event: &str, fields: Value) {
    let mut obj = json!({ "event": event });
    if let (Value::Object(o), Value::Object(f)) = (&mut obj, fields) {
        o.extend(f);
    }
    eprintln!("{obj}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Some(n))
}

fn run(command: Command) -> Result<(), CliError> {
    let threads = configure_threads()?;
    let name = command.name();
    let mut cfg = ExperimentConfig::resolve(command.flags())?;
    let ledger = cfg.ledger()?;
    let started = Instant::now();
    progress("start", json!({ "command": name }));
    let outcome = match command {
        Command::Bound(_) => cmd_bound(&mut cfg, &ledger),
        Command::Classify(_) => cmd_classify(&mut cfg),
        Command::Simulate(_) => cmd_simulate(&mut cfg),
        Command::Verify(_) => cmd_verify(&mut cfg, &ledger),
        Command::Calibrate(_) => cmd_calibrate(&mut cfg, &ledger),
        Command::Probe(_) => cmd_probe(&mut cfg),
    }?;
    let report = json!({
        "command": name,
        "config": cfg,
        "ledger": ledger,
        "result": outcome.result,
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    let metadata = json!({
        "timestamp_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "version": env!("CARGO_PKG_VERSION"),
    });
    match &cfg.output {
        Some(path) => {
            write(path, &text)?;
            let mut meta_path = path.clone().into_os_string();
            meta_path.push(".meta.json");
            write(meta_path.as_ref(), &format!("{metadata:#}\n"))?;
        }
        None => print!("{text}"),
    }
    progress("done", json!({ "command": name, "metadata": metadata }));
    match outcome.failure {
        Some(m) => Err(CliError::Assertion(m)),
        None => Ok(()),
    }
}

fn write(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn cmd_bound(cfg: &mut ExperimentConfig, ledger: &ConstantLedger) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let eps = cfg.eps()?;
    let rep = bound_report(&params, eps, ledger, ReportOptions { t: cfg.t, c1: None })?;
    Outcome::ok(rep)
}

fn cmd_classify(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let r = cfg.r.ok_or_else(|| missing("r"))?;
    let p = cfg.p()?;
    // the auxiliary-norm case split depends on n through ln n
    let n = ExperimentConfig::default_usize(&mut cfg.n, 10_000);
    let case = classify_case(r, p, n)?;
    Outcome::ok(json!({
        "figure1": case.figure1,
        "table_row": case.figure1.table_row(),
        "orderorder": case.orderorder,
    }))
}

fn distortion_opts() -> DistortionOptions {
    DistortionOptions { keep_per_direction: false, ..Default::default() }
}

fn cmd_simulate(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed("simulate")?;
    let params = cfg.params()?;
    let k = cfg.k()?;
    let directions = ExperimentConfig::default_usize(&mut cfg.directions, 10_000);
    let samples = ExperimentConfig::default_u64(&mut cfg.samples, 10_000);
    let mode: TestMode = cfg.mode.get_or_insert_with(|| "random_sphere".into()).parse()?;
    let stream = RandomStream::new(seed, 0);
    let m = estimate_median_norm(&params, samples, stream.child(2))?;
    progress("median", json!({ "M": m.point, "ci": [m.ci_low, m.ci_high] }));
    let g = GaussianMatrix::sample(params.n(), k, stream.child(0))?;
    let dirs = test_directions(k, directions, mode, stream.child(1))?;
    let opts = DistortionOptions { keep_per_direction: cfg.csv.is_some(), ..Default::default() };
    let mut rep = measure_distortion_with(&g, &params, m.point, &dirs, &opts)?;
    if let Some(path) = &cfg.csv {
        write(path, &rep.to_csv())?;
        rep.per_direction.clear();
    }
    let within = cfg.eps.map(|e| rep.max_rel_dev <= e);
    Outcome::ok(json!({ "median": m, "distortion": rep, "within_eps": within }))
}

fn cmd_verify(cfg: &mut ExperimentConfig, ledger: &ConstantLedger) -> Result<Outcome, CliError> {
    let seed = cfg.seed("verify")?;
    let target = cfg.target.clone().ok_or_else(|| missing("target"))?;
    let stream = RandomStream::new(seed, 0);
    match target.as_str() {
        "embedding" => {
            let params = cfg.params()?;
            let k = cfg.k()?;
            let eps = cfg.eps()?;
            let trials = ExperimentConfig::default_u64(&mut cfg.trials, 100);
            let directions = ExperimentConfig::default_usize(&mut cfg.directions, 10_000);
            let samples = ExperimentConfig::default_u64(&mut cfg.samples, 10_000);
            let m = estimate_median_norm(&params, samples, stream.child(u64::MAX - 2))?;
            progress("median", json!({ "M": m.point }));
            let rep = verify_embedding(&params, k, eps, trials, directions, m.point, stream, &distortion_opts())?;
            let failure = cfg.min_success.filter(|&s| rep.success.ci_low < s).map(|s| {
                format!("success rate {:.4} has lower CI edge {:.4} below {s}", rep.success.rate, rep.success.ci_low)
            });
            Ok(Outcome { result: to_value(&rep)?, failure })
        }
        "orderorder" => {
            let r = cfg.r.ok_or_else(|| missing("r"))?;
            let p = cfg.p()?;
            let n = cfg.n.ok_or_else(|| missing("n"))?;
            let t = *cfg.t.get_or_insert(3.0);
            let trials = ExperimentConfig::default_u64(&mut cfg.trials, 10_000);
            let case = dispatch_case(r, p, n)?;
            let rep = verify_orderorder(case, r, p, n, t, trials, ledger, stream)?;
            let failure = (rep.implication_violations > 0)
                .then(|| format!("{} implication violations in {trials} trials", rep.implication_violations));
            Ok(Outcome { result: to_value(&rep)?, failure })
        }
        "schechtman" => {
            let params = cfg.params()?;
            let k = cfg.k()?;
            let t_grid = cfg.t_grid.get_or_insert_with(|| vec![1.0, 2.0, 3.0]).clone();
            let trials = ExperimentConfig::default_u64(&mut cfg.trials, 200);
            let directions = ExperimentConfig::default_usize(&mut cfg.directions, 2_000);
            let samples = ExperimentConfig::default_u64(&mut cfg.samples, 10_000);
            let rep = verify_schechtman_uniform(&params, k, &t_grid, trials, directions, samples, ledger, stream)?;
            Outcome::ok(rep)
        }
        "tail" => {
            let params = cfg.params()?;
            let t_grid = cfg.t_grid.get_or_insert_with(|| vec![0.5, 1.0, 1.5, 2.0]).clone();
            let trials = ExperimentConfig::default_u64(&mut cfg.trials, 10_000);
            let samples = ExperimentConfig::default_u64(&mut cfg.samples, 10_000);
            let c = ledger.get(ledger::C_GAUSS);
            let (rep, m) = concentration_tail(&params, c, &t_grid, trials, samples, stream)?;
            let failure = rep
                .t_grid
                .iter()
                .zip(&rep.rates)
                .find(|(t, rate)| rate.ci_low > 2.0 * (-(*t) * (*t)).exp())
                .map(|(t, rate)| format!("tail rate {:.4} at t = {t} exceeds 2 exp(-t^2) beyond its CI", rate.rate));
            Ok(Outcome { result: json!({ "tail": rep, "median": m }), failure })
        }
        other => Err(CliError::Usage(format!(
            "target: unknown verify target {other:?}; expected embedding, orderorder, schechtman or tail"
        ))),
    }
}

/// Geometric midpoints between neighbouring fit points that share `(q, a)`.
fn midpoint_grid(grid: &[LemmaPoint]) -> Vec<LemmaPoint> {
    grid.windows(2)
        .filter(|w| w[0].q == w[1].q && w[0].a == w[1].a && w[0].x != w[1].x)
        .map(|w| LemmaPoint { x: (w[0].x * w[1].x).sqrt(), ..w[0] })
        .collect()
}

fn cmd_calibrate(cfg: &mut ExperimentConfig, ledger: &ConstantLedger) -> Result<Outcome, CliError> {
    let seed = cfg.seed("calibrate")?;
    let target = cfg.target.clone().ok_or_else(|| missing("target"))?;
    let fit = RandomStream::new(seed, 0);
    let val = RandomStream::new(*cfg.validation_seed.get_or_insert(seed), 1);
    let lemma = match target.as_str() {
        "incomplete_gamma_decay" => Some(AnalyticLemma::IncompleteGammaDecay),
        "incomplete_gamma_growth" => Some(AnalyticLemma::IncompleteGammaGrowth),
        "power_log_sum" => Some(AnalyticLemma::PowerLogSum),
        "power_integral" => Some(AnalyticLemma::PowerIntegral),
        _ => None,
    };
    if let Some(lemma) = lemma {
        let grid = lemma.default_grid();
        let rec = calibrate_two_sided(lemma, &grid, &midpoint_grid(&grid), fit, val)?;
        let mut fitted = ledger.clone();
        fitted.set(ledger::C_BOUND, rec.fitted_constant)?;
        if let Some([lo, _]) = rec.fitted_interval {
            fitted.set(ledger::C_BOUND_LOWER, lo)?;
        }
        return Outcome::ok(json!({ "record": rec, "fitted_ledger": fitted }));
    }
    match target.as_str() {
        "dimension" => {
            let params = cfg.params()?;
            let eps = cfg.eps()?;
            let (d_shape, constant) = match cfg.r {
                Some(r) => (corollary_dimension_rp(r, params.p(), params.n(), eps, ledger)?.d_prime.shape, ledger::C_RP),
                None => {
                    let w = lorentz_embed::WeightSequence::new(params.weights().to_vec())?;
                    (general_dimension(&w, params.p(), eps, ledger)?.shape, ledger::C_DIM)
                }
            };
            let dc = DimensionCalibration {
                eps,
                d_shape,
                fit_trials: ExperimentConfig::default_u64(&mut cfg.trials, 100),
                validation_trials: ExperimentConfig::default_u64(&mut cfg.validation_trials, 100),
                directions: ExperimentConfig::default_usize(&mut cfg.directions, 10_000),
                fit_target: *cfg.fit_target.get_or_insert(0.99),
                median_samples: ExperimentConfig::default_u64(&mut cfg.samples, 10_000),
            };
            let (rec, validation) = calibrate_dimension(&params, &dc, fit, val, &distortion_opts())?;
            let mut fitted = ledger.clone();
            fitted.set(constant, rec.fitted_constant)?;
            Outcome::ok(json!({ "record": rec, "validation": validation, "fitted_ledger": fitted }))
        }
        "tail" => {
            let params = cfg.params()?;
            let t_grid = cfg.t_grid.get_or_insert_with(|| vec![0.5, 1.0, 1.5, 2.0]).clone();
            let trials = ExperimentConfig::default_u64(&mut cfg.trials, 10_000);
            let val_trials = ExperimentConfig::default_u64(&mut cfg.validation_trials, trials);
            let samples = ExperimentConfig::default_u64(&mut cfg.samples, 10_000);
            let rec = calibrate_tail(&params, &t_grid, trials, val_trials, samples, fit, val)?;
            let mut fitted = ledger.clone();
            fitted.set(ledger::C_GAUSS, rec.fitted_constant)?;
            Outcome::ok(json!({ "record": rec, "fitted_ledger": fitted }))
        }
        other => Err(CliError::Usage(format!(
            "target: unknown calibration target {other:?}; expected dimension, tail, incomplete_gamma_decay, \
             incomplete_gamma_growth, power_log_sum or power_integral"
        ))),
    }
}

fn cmd_probe(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed("probe")?;
    let params = cfg.params()?;
    let grid = cfg.eps_grid.get_or_insert_with(|| vec![0.1, 0.15, 0.22, 0.33]).clone();
    let trials = ExperimentConfig::default_u64(&mut cfg.trials, 20);
    let directions = ExperimentConfig::default_usize(&mut cfg.directions, 500);
    let k_cap = ExperimentConfig::default_usize(&mut cfg.k_cap, params.n().min(1000));
    let samples = ExperimentConfig::default_u64(&mut cfg.samples, 10_000);
    let rep = scaling_probe(
        &params,
        &grid,
        trials,
        directions,
        k_cap,
        samples,
        RandomStream::new(seed, 0),
        &DistortionOptions::default(),
    )?;
    Outcome::ok(rep)
}
