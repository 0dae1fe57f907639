//! The `sisug` command line: `simulate`, `identify`, and `experiment`, all
//! driven by an optional TOML config plus overriding flags, with seeded and
//! thread-count-independent outputs.

use crate::bench;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::growth::{identify, GrowthOptions, GrowthTrace, SparseModel};
use crate::series::TimeSeries;
use crate::simulate::{integrate, PolynomialSystem, SamplingScheme};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "sisug",
    version,
    about = "Sparse continuous-time system identification by exhaustive subset growth"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a system at unevenly jittered sample times; write a trajectory CSV
    Simulate(SimulateArgs),
    /// Recover a sparse model from a trajectory CSV or a builtin simulation
    Identify(IdentifyArgs),
    /// Sweep sample counts with repeated randomized runs; write a report CSV
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override config values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin system name (ring6, vanderpol)
    #[arg(long)]
    pub system: Option<String>,
    /// Jitter fraction of the nominal sampling period, in [0, 0.5)
    #[arg(long)]
    pub jitter: Option<f64>,
    /// RNG seed; generated, printed, and embedded in outputs when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores); outputs do not depend on it
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file path
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Total number of samples m (m − 1 jittered stamps after t_start)
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Input trajectory CSV (header t,x1,...,xn); when absent, a builtin
    /// simulation per --system/--m/--jitter/--seed feeds the identifier
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Total number of samples m for the builtin simulation
    #[arg(long)]
    pub m: Option<usize>,
    /// Monomial library degree for identification
    #[arg(long)]
    pub degree: Option<u32>,
    /// Relative-improvement threshold of the stopping criterion
    #[arg(long)]
    pub stop_factor: Option<f64>,
    /// Growth-trace CSV path
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also dump the spline derivative estimates as CSV (t,dx1,...,dxn)
    #[arg(long)]
    pub derivatives: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated total sample counts, e.g. 13,25,49
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    /// Runs per sample count
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Monomial library degree for identification
    #[arg(long)]
    pub degree: Option<u32>,
    /// Relative-improvement threshold of the stopping criterion
    #[arg(long)]
    pub stop_factor: Option<f64>,
}

/// Parse arguments, run, and map failures to a stderr line
/// `error[<category>]: <message>` plus a category-specific exit code.
pub fn run() -> u8 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error[{}]: {err}", category(&err));
            exit_code(&err)
        }
    }
}

/// Stable error categories for scripting against stderr.
pub fn category(err: &Error) -> &'static str {
    match err {
        Error::InvalidParameter { .. } => "config",
        Error::Parse { .. } => "parse",
        Error::Io(_) => "io",
        Error::NonFinite { .. } | Error::Blowup { .. } => "numeric",
        Error::Unvalidatable { .. } | Error::GrowthFailed { .. } => "growth",
        Error::DimensionMismatch { .. }
        | Error::TooFewSamples { .. }
        | Error::NonMonotonicTimes { .. }
        | Error::InvalidBasisFunction { .. }
        | Error::InvalidLibrary { .. }
        | Error::InvalidSubset { .. } => "data",
    }
}

fn exit_code(err: &Error) -> u8 {
    match category(err) {
        "config" => 2,
        "data" => 3,
        "parse" => 4,
        "io" => 5,
        "numeric" => 6,
        "growth" => 7,
        _ => 1,
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => in_pool(args.common.threads, || cmd_simulate(&args)),
        Command::Identify(args) => in_pool(args.common.threads, || cmd_identify(&args)),
        Command::Experiment(args) => in_pool(args.common.threads, || cmd_experiment(&args)),
    }
}

fn in_pool<F: FnOnce() -> Result<()> + Send>(threads: Option<usize>, f: F) -> Result<()> {
    match threads {
        None => f(),
        Some(n) => {
            if n == 0 {
                return Err(Error::InvalidParameter {
                    name: "threads",
                    reason: "must be at least 1".to_string(),
                });
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter {
                    name: "threads",
                    reason: e.to_string(),
                })?;
            pool.install(f)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn pick_seed(flag: Option<u64>, config: Option<u64>) -> (u64, bool) {
    match flag.or(config) {
        Some(seed) => (seed, false),
        None => (rand::random(), true),
    }
}

fn require_spline_minimum(m: usize) -> Result<()> {
    if m < 4 {
        return Err(Error::TooFewSamples { min: 4, got: m });
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let config = load_config(args.common.config.as_deref())?;
    let m = args.m.unwrap_or(config.sampling.m);
    require_spline_minimum(m)?;
    let jitter = args.common.jitter.unwrap_or(config.sampling.jitter);
    let system = config.resolve_system(args.common.system.as_deref())?;
    let (seed, generated) = pick_seed(args.common.seed, config.sampling.seed);
    if generated {
        println!("seed = {seed}");
    }
    let scheme = SamplingScheme {
        t_start: config.sampling.t_start,
        horizon: config.sampling.horizon,
        intervals: m - 1,
        jitter_fraction: jitter,
        seed,
    };
    let times = scheme.sample_times()?;
    let samples = integrate(&system, &times)?;
    let out = args
        .common
        .out
        .clone()
        .or_else(|| config.output.out.clone())
        .unwrap_or_else(|| PathBuf::from("simulate.csv"));
    let comments = vec![
        format!("system = {}", system.name()),
        format!("seed = {seed}"),
        format!("m = {m}"),
        format!("jitter = {jitter}"),
        format!("horizon = {}", config.sampling.horizon),
    ];
    samples.write_csv(&out, &comments)?;
    println!(
        "wrote {} samples of {} (seed {seed}) to {}",
        samples.len(),
        system.name(),
        out.display()
    );
    Ok(())
}

fn cmd_identify(args: &IdentifyArgs) -> Result<()> {
    let mut config = load_config(args.common.config.as_deref())?;
    if let Some(degree) = args.degree {
        config.identification.degree = Some(degree);
    }
    if let Some(stop_factor) = args.stop_factor {
        config.identification.stop_factor = stop_factor;
    }

    let mut system: Option<PolynomialSystem> = None;
    let mut seed_used: Option<u64> = None;
    let samples = match &args.input {
        Some(path) => TimeSeries::read_csv(path)?,
        None => {
            let m = args.m.unwrap_or(config.sampling.m);
            require_spline_minimum(m)?;
            let jitter = args.common.jitter.unwrap_or(config.sampling.jitter);
            let sys = config.resolve_system(args.common.system.as_deref())?;
            let (seed, generated) = pick_seed(args.common.seed, config.sampling.seed);
            if generated {
                println!("seed = {seed}");
            }
            let scheme = SamplingScheme {
                t_start: config.sampling.t_start,
                horizon: config.sampling.horizon,
                intervals: m - 1,
                jitter_fraction: jitter,
                seed,
            };
            let samples = integrate(&sys, &scheme.sample_times()?)?;
            system = Some(sys);
            seed_used = Some(seed);
            samples
        }
    };
    require_spline_minimum(samples.len())?;

    if let Some(path) = &args.derivatives {
        let estimates = crate::spline::estimate_derivatives(&samples)?;
        std::fs::write(path, estimates.to_csv())?;
    }

    let library = config.resolve_library(samples.dimension(), system.as_ref())?;
    let options = config.growth_options();
    let (model, traces) = identify(&samples, &library, &options)?;
    if traces.iter().any(|t| t.budget_exhausted) {
        eprintln!(
            "warning: fit budget ({}) exhausted before k_max; growth stopped early",
            options.fit_budget
        );
    }

    let out = args
        .common
        .out
        .clone()
        .or_else(|| config.output.out.clone())
        .unwrap_or_else(|| PathBuf::from("model.json"));
    let trace_path = args
        .trace
        .clone()
        .or_else(|| config.output.trace.clone())
        .unwrap_or_else(|| PathBuf::from("trace.csv"));

    let json = model_json(
        &model,
        &traces,
        system.as_ref().map(|s| s.name().to_string()),
        seed_used,
        samples.len(),
        &options,
    );
    std::fs::write(
        &out,
        serde_json::to_string_pretty(&json).expect("serializable") + "\n",
    )?;
    std::fs::write(&trace_path, crate::growth::traces_to_csv(&traces))?;

    for (i, trace) in traces.iter().enumerate() {
        let support: Vec<String> = model.support(i).iter().map(|f| f.to_string()).collect();
        println!(
            "x{}: k = {}, support = {{{}}}, loocv = {:.3e}{}",
            i + 1,
            model.k(i),
            support.join(", "),
            trace.selected.epsilon,
            if trace.criterion_fired {
                String::new()
            } else {
                " (criterion never fired)".to_string()
            }
        );
    }
    println!(
        "wrote model to {} and trace to {}",
        out.display(),
        trace_path.display()
    );
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut config = load_config(args.common.config.as_deref())?;
    if let Some(degree) = args.degree {
        config.identification.degree = Some(degree);
    }
    if let Some(stop_factor) = args.stop_factor {
        config.identification.stop_factor = stop_factor;
    }
    let m_values = args
        .m
        .clone()
        .unwrap_or_else(|| config.experiment.m.clone());
    let repetitions = args.repetitions.unwrap_or(config.experiment.repetitions);
    let jitter = args.common.jitter.unwrap_or(config.sampling.jitter);
    let system = config.resolve_system(args.common.system.as_deref())?;
    let library = config.resolve_library(system.dimension(), Some(&system))?;
    let (base_seed, generated) = pick_seed(args.common.seed, config.sampling.seed);
    if generated {
        println!("seed = {base_seed}");
    }

    let experiment = bench::ExperimentConfig {
        system,
        library,
        m_values,
        repetitions,
        jitter_fraction: jitter,
        horizon: config.sampling.horizon,
        t_start: config.sampling.t_start,
        base_seed,
        growth: config.growth_options(),
    };
    let report = bench::run_experiment(&experiment)?;

    let out = args
        .common
        .out
        .clone()
        .or_else(|| config.output.out.clone())
        .unwrap_or_else(|| PathBuf::from("report.csv"));
    let comments = vec![
        format!("system = {}", report.system),
        format!("seed = {base_seed}"),
        format!("repetitions = {repetitions}"),
        format!("jitter = {jitter}"),
        format!("stop_factor = {}", experiment.growth.stop_factor),
    ];
    std::fs::write(&out, report.to_csv(&comments))?;

    println!(
        "{:>6} {:>12} {:>12} {:>13} {:>9}",
        "m", "mean_rmse", "std_rmse", "support_rate", "failures"
    );
    for row in &report.rows {
        println!(
            "{:>6} {:>12.6} {:>12.6} {:>13.3} {:>9}",
            row.m, row.mean_rmse, row.std_rmse, row.support_rate, row.failures
        );
    }
    println!("wrote report to {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct ModelJson {
    system: Option<String>,
    seed: Option<u64>,
    samples: usize,
    dimension: usize,
    stop_factor: f64,
    /// Exponent vectors of the identification library, in column order.
    library: Vec<Vec<u32>>,
    variables: Vec<VariableJson>,
    /// The n × p coefficient matrix over `library`; off-support entries are
    /// exact zeros.
    z: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct VariableJson {
    /// 1-based state-variable index.
    index: usize,
    k: usize,
    /// Exponent vectors of the selected basis functions.
    support: Vec<Vec<u32>>,
    support_names: Vec<String>,
    coefficients: Vec<f64>,
    loocv_error: f64,
    stop_k: usize,
    criterion_fired: bool,
    /// Best ε per evaluated k; null marks an unvalidatable (infinite) level.
    epsilon_by_k: Vec<EpsilonByK>,
}

#[derive(Debug, Serialize)]
struct EpsilonByK {
    k: usize,
    epsilon: Option<f64>,
    subset: Vec<usize>,
}

fn model_json(
    model: &SparseModel,
    traces: &[GrowthTrace],
    system: Option<String>,
    seed: Option<u64>,
    samples: usize,
    options: &GrowthOptions,
) -> ModelJson {
    let variables = traces
        .iter()
        .enumerate()
        .map(|(i, trace)| {
            let support: Vec<Vec<u32>> = model
                .support(i)
                .iter()
                .map(|f| f.exponents().to_vec())
                .collect();
            let support_names = model.support(i).iter().map(|f| f.to_string()).collect();
            let coefficients = trace
                .selected
                .subset
                .iter()
                .map(|&j| model.row(i)[j])
                .collect();
            VariableJson {
                index: i + 1,
                k: model.k(i),
                support,
                support_names,
                coefficients,
                loocv_error: trace.selected.epsilon,
                stop_k: trace.stop_k,
                criterion_fired: trace.criterion_fired,
                epsilon_by_k: trace
                    .k_minima
                    .iter()
                    .map(|rec| EpsilonByK {
                        k: rec.k,
                        epsilon: rec.epsilon.is_finite().then_some(rec.epsilon),
                        subset: rec.subset.iter().map(|&j| j + 1).collect(),
                    })
                    .collect(),
            }
        })
        .collect();
    ModelJson {
        system,
        seed,
        samples,
        dimension: model.dimension(),
        stop_factor: options.stop_factor,
        library: model
            .library()
            .functions()
            .iter()
            .map(|f| f.exponents().to_vec())
            .collect(),
        variables,
        z: model.z().to_vec(),
    }
}
