//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a model fails validation or a
//! computation fails, 2 on usage errors and unreadable or malformed input.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frailty::{FrailtyKind, FrailtyStructure};
use crate::hazards::HazardFamily;
use crate::identifiability::{
    default_mle_init, fit_mle, probe, recover_parameters, FGrid, MeanConstraint, ProbeGrid, RecoverConfig,
};
use crate::io;
use crate::model::{ModelSpec, QuadratureConfig};
use crate::optimize::OptimizeConfig;
use crate::simulate::{simulate_to_writer, SimConfig};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "FRAILTYKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "frailtykit", version, about = "Bivariate competing-risks frailty models")]
struct Cli {
    /// Worker threads (default: FRAILTYKIT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate paired observations to CSV.
    Simulate(SimulateArgs),
    /// Evaluate joint sub-distributions and sub-densities on a grid.
    Eval(EvalArgs),
    /// Compare two models and write a probe report.
    Probe(ProbeArgs),
    /// Fit a model to another model's sub-distribution grid.
    Recover(RecoverArgs),
    /// Maximum-likelihood fit to a complete dataset.
    Fit(FitArgs),
    /// Check hazard-family conditions and frailty invariants.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of pairs.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exponential censoring rate per individual (0 disables censoring).
    #[arg(long, default_value_t = 0.0)]
    censoring: f64,
    /// Add the frailty atom of each pair as an `atom_id` column.
    #[arg(long)]
    record_atoms: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Grid JSON `{"t1_points": [...], "t2_points": [...]}`; defaults to the
    /// model's quantile grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long)]
    model_a: PathBuf,
    #[arg(long)]
    model_b: PathBuf,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    /// Model whose sub-distribution grid is the target.
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    init: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    /// Let the frailty scale float (drops the unit-mean constraint).
    #[arg(long)]
    unconstrained: bool,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// shared | correlated | shared_cause_specific | correlated_cause_specific
    #[arg(long)]
    structure: FrailtyKind,
    /// Number of frailty atoms.
    #[arg(long)]
    atoms: usize,
    /// Hazard family of every cause.
    #[arg(long, default_value = "weibull")]
    family: HazardFamily,
    /// Start from this model instead of the default initial point.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
}

enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::InvalidSpec(_) => {
                Failure::Usage(e.to_string())
            }
            Error::StructureMismatch(_) | Error::Index(_) => Failure::Usage(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match cli.threads.map(Ok).or_else(threads_from_env).transpose() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn threads_from_env() -> Option<std::result::Result<usize, String>> {
    let raw = std::env::var(THREADS_ENV).ok()?;
    Some(
        raw.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`")),
    )
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Eval(a) => eval(a),
        Command::Probe(a) => probe_cmd(a),
        Command::Recover(a) => recover(a),
        Command::Fit(a) => fit(a),
        Command::Validate(a) => validate(a),
    }
}

fn load_grid(path: Option<&Path>, model: &ModelSpec) -> Result<ProbeGrid> {
    match path {
        Some(p) => io::load_json(p),
        None => ProbeGrid::default_for(model),
    }
}

fn simulate(a: SimulateArgs) -> Outcome {
    let model = io::load_model(&a.model)?;
    let mut cfg = SimConfig::new(a.n, a.seed).with_censoring(a.censoring);
    cfg.record_atom = a.record_atoms;
    let out = BufWriter::new(File::create(&a.out).map_err(Error::from)?);
    simulate_to_writer(&model, &cfg, out)?;
    Ok(())
}

fn eval(a: EvalArgs) -> Outcome {
    let model = io::load_model(&a.model)?;
    let grid = load_grid(a.grid.as_deref(), &model)?;
    let out = BufWriter::new(File::create(&a.out).map_err(Error::from)?);
    io::write_evaluation(&model, grid.t1_points(), grid.t2_points(), &QuadratureConfig::default(), out)?;
    Ok(())
}

fn probe_cmd(a: ProbeArgs) -> Outcome {
    let ma = io::load_model(&a.model_a)?;
    let mb = io::load_model(&a.model_b)?;
    let grid = load_grid(a.grid.as_deref(), &ma)?;
    let report = probe(&ma, &mb, Some(&grid), &QuadratureConfig::default())?;
    io::save_json(&a.out, &report)?;
    Ok(())
}

fn recover(a: RecoverArgs) -> Outcome {
    let target = io::load_model(&a.target)?;
    let init = io::load_model(&a.init)?;
    let grid = load_grid(a.grid.as_deref(), &target)?;
    let q = QuadratureConfig::default();
    let cfg = RecoverConfig {
        mode: if a.unconstrained { MeanConstraint::Dropped } else { MeanConstraint::Enforced },
        optimizer: OptimizeConfig { budget: a.budget, seed: a.seed, restarts: a.restarts, ..Default::default() },
        quadrature: q,
    };
    let result = recover_parameters(&FGrid::from_model(&target, &grid, &q)?, &init, &cfg)?;
    io::save_json(&a.out, &result)?;
    Ok(())
}

fn fit(a: FitArgs) -> Outcome {
    let data = io::read_dataset(&a.data)?;
    let causes = |k: usize| data.iter().map(|o| o.cause(k)).max().unwrap_or(0);
    let init = match &a.init {
        Some(p) => io::load_model(p)?,
        None => {
            let structure = FrailtyStructure::new(a.structure, causes(0), causes(1))?;
            default_mle_init(&data, structure, a.atoms, a.family)?
        }
    };
    if init.structure().kind() != a.structure || init.frailty().len() != a.atoms {
        return Err(Failure::Usage("--init model disagrees with --structure/--atoms".into()));
    }
    let opt = OptimizeConfig { budget: a.budget, seed: a.seed, ..Default::default() };
    let result = fit_mle(&data, &init, &opt)?;
    io::save_json(&a.out, &result)?;
    Ok(())
}

/// Tolerance on means and weight sums as written in a model file (decimal
/// inputs rarely hit 1 to machine precision).
const WRITTEN_MEAN_TOL: f64 = 1e-9;

#[derive(Deserialize)]
struct WrittenFrailty {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    value: f64,
}

fn validate(a: ValidateArgs) -> Outcome {
    let text = std::fs::read_to_string(&a.model).map_err(Error::from)?;
    let value: serde_json::Value = io::parse_json(&text, &a.model)?;
    // the loader rescales frailty to unit means, so check the law as written
    let written: Option<WrittenFrailty> =
        value.get("frailty").cloned().and_then(|f| serde_json::from_value(f).ok());
    // a well-formed document with invalid parameters is a validation failure
    let model: ModelSpec = match serde_json::from_value(value) {
        Ok(m) => m,
        Err(e) => return Err(Failure::Invalid(format!("{}: {e}", a.model.display()))),
    };
    let mut checks = Vec::new();
    for (k, j, h) in model.hazards().iter() {
        for c in h.validate_family().checks {
            checks.push(Check { name: format!("hazard {},{} {}: {}", k + 1, j + 1, h.family().name(), c.name), passed: c.passed, value: c.value });
        }
    }
    let law = model.frailty().law();
    let (atoms, weights) = match &written {
        Some(w) => (w.atoms.as_slice(), w.weights.as_slice()),
        None => (law.atoms(), law.weights()),
    };
    let total: f64 = weights.iter().sum();
    for c in 0..model.frailty().dim() {
        let mean = atoms.iter().zip(weights).map(|(a, w)| a[c] * w).sum::<f64>() / total;
        checks.push(Check {
            name: format!("frailty coordinate {} mean is 1", c + 1),
            passed: (mean - 1.0).abs() <= WRITTEN_MEAN_TOL,
            value: mean,
        });
    }
    checks.push(Check { name: "frailty weights sum to 1".into(), passed: (total - 1.0).abs() <= WRITTEN_MEAN_TOL, value: total });
    let min_atom = law.atoms().iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    checks.push(Check { name: "frailty atoms positive".into(), passed: min_atom > 0.0, value: min_atom });

    for c in &checks {
        println!("{} {} ({:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value);
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{} failed validation", a.model.display())))
    }
}
