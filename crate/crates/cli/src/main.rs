//! Command-line front end for the koopreach verifier.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use koopreach_core::dynamics::system_by_name;
use koopreach_core::harness::experiments::{
    convergence_experiment, hausdorff_experiment, histogram, is_unimodal, median, ExperimentGrid,
};
use koopreach_core::harness::io::{read_dataset, read_json, write_csv_rows, write_dataset, write_json, DatasetMeta};
use koopreach_core::harness::pipeline::VerifyContext;
use koopreach_core::harness::{learn, run_benchmark, simulate, verify, RunConfig};
use koopreach_core::reachtime::Verdict;
use koopreach_core::regions::Region;
use koopreach_core::spectral::KoopmanModel;
use koopreach_core::{Error, Result};

const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "koopreach",
    version,
    about = "Data-driven reachability verification with Koopman eigenfunctions"
)]
struct Cli {
    /// Master seed; every command is deterministic given it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file merged over the defaults of the system.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a snapshot dataset from a built-in system.
    Simulate(SimulateArgs),
    /// Learn principal eigenpairs from a dataset.
    Learn(LearnArgs),
    /// Bound the reach time between two regions with a learned model.
    Verify(VerifyArgs),
    /// Example 1 distance study against the analytic eigenfunctions.
    ExperimentHausdorff(HausdorffArgs),
    /// Duffing study over dictionary degrees and sample counts.
    ExperimentConvergence(ConvergenceArgs),
    /// Run a canned benchmark and check it against its thresholds.
    Benchmark {
        /// example1, duffing or roessler.
        name: String,
    },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// example1, duffing or roessler.
    system: String,
    /// Number of trajectories.
    #[arg(long)]
    traj: Option<usize>,
    /// Snapshot pairs per trajectory.
    #[arg(long)]
    steps: Option<usize>,
    /// Sampling interval between snapshots.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Debug)]
struct LearnArgs {
    /// Dataset CSV with its `.meta.json` sidecar.
    #[arg(long)]
    data: PathBuf,
    /// Total degree of the monomial dictionary.
    #[arg(long)]
    degree: Option<u32>,
    /// Reject eigenpairs whose relative residual exceeds this.
    #[arg(long)]
    max_residual: Option<f64>,
    /// Target eigenvalue as `re` or `re,im`; repeatable.
    #[arg(long = "target", value_parser = parse_complex, allow_hyphen_values = true)]
    targets: Vec<[f64; 2]>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Model JSON written by `learn`.
    #[arg(long)]
    model: PathBuf,
    /// Region JSON file for the initial set.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Region JSON file for the target set.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Time horizon.
    #[arg(long)]
    t_max: Option<f64>,
    /// Failure probability of the guarantee.
    #[arg(long)]
    delta: Option<f64>,
    /// Extremum tolerance; calibrated from the sample count when omitted.
    #[arg(long)]
    eps: Option<f64>,
    /// Samples drawn from each region.
    #[arg(long)]
    samples: Option<usize>,
    /// Largest total weight of eigenpair combinations.
    #[arg(long)]
    max_weight: Option<u32>,
}

#[derive(Args, Debug)]
struct HausdorffArgs {
    /// Independent trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Samples per region in each trial.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    /// Comma-separated dictionary degrees.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<u32>>,
    /// Comma-separated sample counts per region.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
    /// Sample redraws per cell.
    #[arg(long)]
    trials: Option<usize>,
}

fn parse_complex(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("bad number {p:?}"));
    match parts.as_slice() {
        [re] => Ok([num(re)?, 0.0]),
        [re, im] => Ok([num(re)?, num(im)?]),
        _ => Err("expected `re` or `re,im`".into()),
    }
}

/// Outcome of a successful command.
enum Status {
    Ok,
    Inconclusive,
    Failed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Inconclusive) => ExitCode::from(EXIT_INCONCLUSIVE),
        Ok(Status::Failed) => ExitCode::from(EXIT_NUMERICAL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL })
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("KOOPREACH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("KOOPREACH_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn load_config(cli: &Cli) -> Result<Option<Value>> {
    cli.config.as_deref().map(read_json::<Value>).transpose()
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: &Cli) -> Result<Status> {
    let overrides = load_config(cli)?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a, overrides.as_ref()),
        Command::Learn(a) => cmd_learn(cli, a, overrides.as_ref()),
        Command::Verify(a) => cmd_verify(cli, a, overrides.as_ref()),
        Command::ExperimentHausdorff(a) => cmd_hausdorff(cli, a, overrides.as_ref()),
        Command::ExperimentConvergence(a) => cmd_convergence(cli, a, overrides.as_ref()),
        Command::Benchmark { name } => cmd_benchmark(cli, name, overrides.as_ref()),
    }
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs, overrides: Option<&Value>) -> Result<Status> {
    let system = system_by_name(&a.system)?;
    let mut cfg = RunConfig::with_overrides(&a.system, overrides)?;
    if let Some(v) = a.traj {
        cfg.simulate.n_traj = v;
    }
    if let Some(v) = a.steps {
        cfg.simulate.n_steps = v;
    }
    if let Some(v) = a.dt {
        cfg.simulate.dt = v;
    }
    let generated = simulate(&system, &cfg.simulate, cli.seed)?;
    let path = out_path(cli, "dataset.csv");
    let meta = DatasetMeta {
        dim: generated.dataset.dimension(),
        dt: generated.dataset.dt(),
        seed: Some(cli.seed),
        system: Some(a.system.clone()),
    };
    write_dataset(&path, &generated.dataset, &meta)?;
    println!(
        "wrote {} pairs to {} ({} pairs and {} trajectories dropped)",
        generated.dataset.len(),
        path.display(),
        generated.dropped_pairs,
        generated.dropped_trajectories
    );
    Ok(Status::Ok)
}

fn cmd_learn(cli: &Cli, a: &LearnArgs, overrides: Option<&Value>) -> Result<Status> {
    let (data, meta) = read_dataset(&a.data)?;
    let cfg = RunConfig::from_json(overrides, Some(meta.system.as_deref().unwrap_or("custom")))?;
    let mut lc = cfg.learn.clone();
    if let Some(d) = a.degree {
        lc.degree = d;
    }
    if let Some(r) = a.max_residual {
        lc.max_residual = r;
    }
    if !a.targets.is_empty() {
        lc.targets = Some(
            a.targets
                .iter()
                .map(|t| num_complex::Complex64::new(t[0], t[1]))
                .collect(),
        );
        lc.count = a.targets.len();
    }
    let mut model = learn(&data, &lc, Some(cli.seed))?;
    model.provenance.system = Some(cfg.system.clone());
    let path = out_path(cli, "model.json");
    write_json(&path, &model)?;
    for p in &model.eigenpairs {
        println!(
            "lambda = {:.6} {:+.6}i  residual = {:.3e}",
            p.lambda.re, p.lambda.im, p.residual
        );
    }
    println!("wrote model to {}", path.display());
    Ok(Status::Ok)
}

fn read_region(path: &Path) -> Result<Region> {
    let r: Region = read_json(path)?;
    r.validate()?;
    Ok(r)
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs, overrides: Option<&Value>) -> Result<Status> {
    let model: KoopmanModel = read_json(&a.model)?;
    let system = model.provenance.system.clone().unwrap_or_else(|| "custom".into());
    let cfg = RunConfig::from_json(overrides, Some(&system))?;
    let mut vc = cfg.verify.clone();
    if let Some(p) = &a.init {
        vc.x0 = Some(read_region(p)?);
    }
    if let Some(p) = &a.target {
        vc.xf = Some(read_region(p)?);
    }
    if let Some(v) = a.t_max {
        vc.t_max = Some(v);
    }
    if let Some(v) = a.delta {
        vc.delta = v;
    }
    if let Some(v) = a.eps {
        vc.eps = Some(v);
    }
    if let Some(v) = a.samples {
        vc.n_samples = Some(v);
    }
    if let Some(v) = a.max_weight {
        vc.max_weight = v;
    }
    let ctx = VerifyContext {
        system: Some(cfg.system.clone()),
        degree: Some(model.dict.degree),
        dataset_hash: model.provenance.dataset_hash.clone(),
        n_pairs: Some(model.provenance.n_pairs),
    };
    let report = verify(&model, &vc, cli.seed, &ctx)?;
    let path = out_path(cli, "report.json");
    write_json(&path, &report)?;
    println!("{}", report.summary());
    println!("wrote report to {}", path.display());
    Ok(match report.verdict {
        Verdict::UnreachableCertified => Status::Ok,
        Verdict::InconclusiveWithBound => Status::Inconclusive,
    })
}

fn cmd_hausdorff(cli: &Cli, a: &HausdorffArgs, overrides: Option<&Value>) -> Result<Status> {
    let cfg = RunConfig::from_json(overrides, Some("example1"))?;
    let trials = a.trials.unwrap_or(cfg.experiment.n_trials);
    let samples = a.samples.unwrap_or(cfg.experiment.n_samples);
    let outcome = hausdorff_experiment(&cfg, trials, samples, cli.seed)?;
    let path = out_path(cli, "hausdorff.csv");
    write_csv_rows(&path, &outcome.rows)?;
    let mut d: Vec<f64> = outcome.rows.iter().map(|r| r.d_h).collect();
    let counts = histogram(&d, 10);
    println!(
        "{} trials ({} failed): median d_H = {:.4}, within budget {:.1}%, histogram {:?} ({})",
        outcome.rows.len(),
        outcome.failures,
        median(&mut d),
        100.0 * outcome.coverage(),
        counts,
        if is_unimodal(&counts) {
            "unimodal"
        } else {
            "not unimodal"
        }
    );
    println!("wrote {}", path.display());
    Ok(Status::Ok)
}

fn cmd_convergence(cli: &Cli, a: &ConvergenceArgs, overrides: Option<&Value>) -> Result<Status> {
    let cfg = RunConfig::from_json(overrides, Some("duffing"))?;
    let grid = ExperimentGrid {
        degrees: a.degrees.clone().unwrap_or_else(|| cfg.experiment.degrees.clone()),
        sample_counts: a
            .samples
            .clone()
            .unwrap_or_else(|| cfg.experiment.sample_counts.clone()),
        n_trials: a.trials.unwrap_or(cfg.experiment.n_trials.min(20)),
        base_seed: cli.seed,
    };
    let outcome = convergence_experiment(&cfg, &grid)?;
    let path = out_path(cli, "convergence.csv");
    write_csv_rows(&path, &outcome.rows)?;
    for &deg in &grid.degrees {
        for &n in &grid.sample_counts {
            let mut d: Vec<f64> = outcome
                .rows
                .iter()
                .filter(|r| r.degree == deg && r.n_samples == n)
                .map(|r| r.d_h)
                .collect();
            println!("degree {deg:>2}  samples {n:>6}: median d_H = {:.4}", median(&mut d));
        }
    }
    let within = outcome.rows.iter().filter(|r| r.within_budget).count();
    println!(
        "{} rows ({} failed), {} within budget; wrote {}",
        outcome.rows.len(),
        outcome.failures,
        within,
        path.display()
    );
    Ok(Status::Ok)
}

fn cmd_benchmark(cli: &Cli, name: &str, overrides: Option<&Value>) -> Result<Status> {
    if !matches!(name, "example1" | "duffing" | "roessler") {
        return Err(Error::UnknownSystem(name.to_string()));
    }
    let result = run_benchmark(name, cli.seed, overrides)?;
    println!("{}", result.report.summary());
    for c in &result.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(path) = &cli.out {
        write_json(path, &result)?;
    }
    Ok(if result.passed() { Status::Ok } else { Status::Failed })
}
