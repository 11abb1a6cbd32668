//! `rotgrad`: run fits, training sweeps and the check suite.

mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use rotgrad_core::{Method, RepKind};
use rotgrad_harness::checks::{run_checks, CheckOptions, DEFAULT_SAMPLES};
use rotgrad_harness::config::{
    AUTO_TAU_INIT, AUTO_TAU_STEPS, DEFAULT_BATCH, DEFAULT_EVAL_EVERY, DEFAULT_ITERS, DEFAULT_LR, DEFAULT_PROBE_TARGET_DEG,
    S2_TAU_CONVERGE, S2_TAU_INIT,
};
use rotgrad_harness::fit::{FIT_ITERS, FIT_LR};
use rotgrad_harness::{
    fit_report, fit_single_rotation, train, train_s2, ExperimentConfig, FitConfig, HarnessError, LossSpec,
    MetricsReport, S2Config, S2Method, TauSpec,
};

use crate::output::{write_comparison, write_run, CellSummary};

#[derive(Parser)]
#[command(name = "rotgrad", version, about = "Projective manifold gradients for rotation regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a single raw output towards a random rotation.
    Fit(FitArgs),
    /// Train the MLP on synthetic point clouds.
    Train(TrainArgs),
    /// Run the verification suite.
    Check(CheckArgs),
}

#[derive(Args)]
struct TauArgs {
    /// Constant τ.
    #[arg(long, conflicts_with_all = ["tau_init", "tau_converge", "tau_gt", "tau_probe"])]
    tau: Option<f64>,
    /// Start of the τ staircase.
    #[arg(long)]
    tau_init: Option<f64>,
    /// End of the τ staircase; defaults to the analytic value of the loss.
    #[arg(long)]
    tau_converge: Option<f64>,
    #[arg(long, default_value_t = AUTO_TAU_STEPS)]
    tau_steps: usize,
    /// Per-sample τ that puts the goal on the ground truth.
    #[arg(long, conflicts_with_all = ["tau_init", "tau_converge", "tau_probe"])]
    tau_gt: bool,
    /// Probe for a constant τ whose goals stay within this many degrees.
    #[arg(long, num_args = 0..=1, default_missing_value = "10", conflicts_with_all = ["tau_init", "tau_converge"])]
    tau_probe: Option<f64>,
}

impl TauArgs {
    fn spec(&self, default_init: f64, analytic: Option<f64>, loss: &str) -> Result<TauSpec, CliError> {
        if let Some(tau) = self.tau {
            return Ok(TauSpec::Constant { tau });
        }
        if self.tau_gt {
            return Ok(TauSpec::GroundTruth);
        }
        if let Some(target_deg) = self.tau_probe {
            return Ok(TauSpec::Probe { target_deg });
        }
        if self.tau_init.is_none() && self.tau_converge.is_none() {
            return Ok(TauSpec::Auto);
        }
        let tau_converge = self.tau_converge.or(analytic).ok_or_else(|| {
            CliError::Config(format!("{loss} loss has no analytic tau; pass --tau-converge"))
        })?;
        Ok(TauSpec::Schedule {
            tau_init: self.tau_init.unwrap_or(default_init),
            tau_converge,
            n_steps: self.tau_steps,
        })
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value = "9d")]
    rep: RepKind,
    #[arg(long, default_value = "rpmg")]
    method: Method,
    #[arg(long, default_value = "l2")]
    loss: LossSpec,
    #[arg(long, default_value_t = rotgrad_core::rpmg::DEFAULT_LAMBDA)]
    lambda: f64,
    #[command(flatten)]
    tau: TauArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = FIT_ITERS)]
    iters: usize,
    #[arg(long, default_value_t = FIT_LR)]
    lr: f64,
    /// Output root; one directory per run is created below it.
    #[arg(long, env = "ROTGRAD_OUT_DIR", default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "9d")]
    rep: RepKind,
    /// Gradient method; with --sphere one of l2-norm, l2-raw, mg, pmg, rpmg.
    #[arg(long, default_value = "rpmg")]
    method: String,
    /// Comma-separated methods to sweep instead of --method.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value = "l2")]
    loss: LossSpec,
    #[arg(long, default_value_t = rotgrad_core::rpmg::DEFAULT_LAMBDA)]
    lambda: f64,
    #[command(flatten)]
    tau: TauArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated seeds to sweep instead of --seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_ITERS)]
    iters: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    batch: usize,
    #[arg(long, default_value_t = DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_EVAL_EVERY)]
    eval_every: usize,
    /// Regress the rotated z axis on S² instead of a rotation.
    #[arg(long)]
    sphere: bool,
    /// Sweep cells run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, env = "ROTGRAD_OUT_DIR", default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Run only checks whose name contains this.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random cases per sampled check.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numeric(String),
    ChecksFailed(Vec<String>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::ChecksFailed(names) => write!(f, "failed checks: {}", names.join(", ")),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("cannot write output: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let mut cfg = FitConfig::new(a.rep, a.method).with_seed(a.seed);
    cfg.loss = a.loss;
    cfg.lambda = a.lambda;
    cfg.tau = a.tau.spec(AUTO_TAU_INIT, a.loss.tau_converge(), a.loss.name())?;
    cfg.iters = a.iters;
    cfg.lr = a.lr;
    cfg.validate()?;
    let started = now();
    let trace = fit_single_rotation(&cfg)?;
    let report = fit_report(&cfg, &trace);
    let name = format!("fit-{}-{}-{}-s{}", a.rep, a.method, a.loss.name(), a.seed);
    let dir = write_run(&a.out_dir, &name, "fit", &report.config, &started, &report)?;
    println!("{name}: final error {:.3e} rad -> {}", trace.final_error(), dir.display());
    match &trace.aborted {
        Some(why) => Err(CliError::Numeric(why.clone())),
        None => Ok(()),
    }
}

/// One sweep cell, validated before anything runs.
enum Cell {
    So3(ExperimentConfig),
    S2(S2Config),
}

impl Cell {
    fn name(&self) -> String {
        match self {
            Cell::So3(c) => format!("train-{}-{}-{}-s{}", c.rep, c.method, c.loss.name(), c.run.seed),
            Cell::S2(c) => format!("train-s2-{}-s{}", c.method.name(), c.run.seed),
        }
    }

    fn method(&self) -> String {
        match self {
            Cell::So3(c) => c.method.name().into(),
            Cell::S2(c) => c.method.name().into(),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Cell::So3(c) => c.run.seed,
            Cell::S2(c) => c.run.seed,
        }
    }

    fn run(&self) -> Result<MetricsReport, HarnessError> {
        match self {
            Cell::So3(c) => train(c),
            Cell::S2(c) => train_s2(c),
        }
    }
}

fn build_cells(a: &TrainArgs) -> Result<Vec<Cell>, CliError> {
    let methods = if a.methods.is_empty() { vec![a.method.clone()] } else { a.methods.clone() };
    let seeds = if a.seeds.is_empty() { vec![a.seed] } else { a.seeds.clone() };
    if a.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for m in &methods {
        for &seed in &seeds {
            let cell = if a.sphere {
                let method: S2Method = m.parse()?;
                let mut c = S2Config::new(method).with_seed(seed);
                c.lambda = a.lambda;
                c.tau = a.tau.spec(S2_TAU_INIT, Some(S2_TAU_CONVERGE), "sphere")?;
                c.run.iters = a.iters;
                c.run.batch = a.batch;
                c.run.lr = a.lr;
                c.run.eval_every = a.eval_every;
                c.validate()?;
                Cell::S2(c)
            } else {
                let method: Method = m.parse().map_err(|e: rotgrad_core::Error| CliError::Config(e.to_string()))?;
                let mut c = ExperimentConfig::new(a.rep, method).with_seed(seed).with_iters(a.iters);
                c.loss = a.loss;
                c.lambda = a.lambda;
                c.tau = a.tau.spec(AUTO_TAU_INIT, a.loss.tau_converge(), a.loss.name())?;
                if matches!(c.tau, TauSpec::Auto) && method != Method::Vanilla && !a.loss.has_analytic_tau() {
                    c.tau = TauSpec::Probe {
                        target_deg: DEFAULT_PROBE_TARGET_DEG,
                    };
                }
                c.run.batch = a.batch;
                c.run.lr = a.lr;
                c.run.eval_every = a.eval_every;
                c.validate()?;
                Cell::So3(c)
            };
            cells.push(cell);
        }
    }
    Ok(cells)
}

fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let cells = build_cells(a)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<CellSummary, CliError>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let run_cell = |i: usize| -> Result<CellSummary, CliError> {
        let cell = &cells[i];
        let started = now();
        let report = cell.run()?;
        let name = cell.name();
        let dir = write_run(&a.out_dir, &name, "train", &report.config, &started, &report)?;
        println!(
            "{name}: median {:.3}° mean {:.3}° acc5 {:.3} norm ratio {:.2} -> {}",
            report.final_row.median_deg,
            report.final_row.mean_deg,
            report.final_row.acc5,
            report.norm_ratio(),
            dir.display()
        );
        Ok(CellSummary::new(cell.method(), cell.seed(), &report))
    };
    std::thread::scope(|s| {
        for _ in 0..a.jobs.min(cells.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let r = run_cell(i);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let mut summaries = Vec::new();
    let mut first_err = None;
    for r in results.into_inner().expect("workers joined") {
        match r.expect("every cell ran") {
            Ok(s) => summaries.push(s),
            Err(e) => {
                eprintln!("{e}");
                first_err.get_or_insert(e);
            }
        }
    }
    if cells.len() > 1 && !summaries.is_empty() {
        let path = write_comparison(&a.out_dir, &summaries)?;
        println!("comparison -> {}", path.display());
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_check(a: &CheckArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Config("--samples must be at least 1".into()));
    }
    let opts = CheckOptions {
        seed: a.seed,
        samples: a.samples,
        ..CheckOptions::default()
    };
    let results = run_checks(&opts, a.filter.as_deref());
    if results.is_empty() {
        return Err(CliError::Config(format!(
            "no check matches filter {:?}",
            a.filter.as_deref().unwrap_or("")
        )));
    }
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    println!("{} of {} checks passed", results.len() - failed.len(), results.len());
    if let Some(path) = &a.json {
        let body = serde_json::to_string_pretty(&results).expect("check results serialize");
        std::fs::write(path, body)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}
