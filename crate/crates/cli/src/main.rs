//! `qtomo`: simulate Pauli measurements, reconstruct low-rank states, and
//! evaluate the error guarantees.
//!
//! Exit codes: 0 success, 1 bad input or configuration, 2 numerical failure
//! (a flagged divergence included), 3 I/O.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qtomo_core::baselines::{mifgd_solve, BaselineOptions};
use qtomo_core::bounds::{contraction_certificate, error_bound_series, gamma_recursion, iteration_estimate};
use qtomo_core::experiment::{baseline_file_name, parse_number, run_experiment, ExperimentConfig, OUTPUT_ROOT_ENV};
use qtomo_core::metrics::metrics;
use qtomo_core::sensing::rip_probe;
use qtomo_core::simulator::build_measurement;
use qtomo_core::{
    BoundInputs, CountsFile, Dataset, Error, SensingEnsemble, Shots, SolverOptions, StateKind, StopReason,
};

#[derive(Parser)]
#[command(name = "qtomo", version, about = "Low-rank quantum state tomography from Pauli measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a state and an ensemble, write the measured dataset.
    Simulate(SimulateArgs),
    /// Run RGD on a dataset and write its trace.
    Solve(SolveArgs),
    /// Run the momentum baseline for each μ on a dataset.
    Baseline(BaselineArgs),
    /// Evaluate the γ recursion and error bounds.
    Bound(BoundArgs),
    /// Empirical restricted isometry probe for a sampled ensemble.
    RipProbe(RipArgs),
    /// Full experiment from a config file.
    Bench(BenchArgs),
    /// Turn a counts file into a dataset.
    Decode(DecodeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "ghz")]
    state: String,
    #[arg(short, long)]
    k: usize,
    #[arg(short, long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Shots per Pauli, or `exact`.
    #[arg(long, default_value = "8192")]
    shots: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(short, long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    stop_tol: f64,
    #[arg(long)]
    timing: bool,
    /// Trace CSV destination.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(short, long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    /// Comma-separated momentum values; fractions allowed.
    #[arg(long, default_value = "1/8,1/4,1/3,1/2,3/4")]
    mu: String,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long)]
    sigma_1: f64,
    #[arg(long)]
    sigma_r: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long)]
    delta_2r: f64,
    #[arg(long)]
    delta_3r: f64,
    #[arg(long, default_value_t = 1.0)]
    rho_frob: f64,
    #[arg(long, default_value_t = 0.0)]
    init_err: f64,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Contraction factor for the series and the certificate.
    #[arg(long)]
    gamma_bar: Option<f64>,
    #[arg(long, default_value_t = 10)]
    k: u32,
    #[arg(long, num_args = 3, value_names = ["C0", "C1", "C2"], default_values_t = [1.0, 4.0, 8.0])]
    constants: Vec<f64>,
}

#[derive(Args)]
struct RipArgs {
    #[arg(short, long)]
    k: usize,
    #[arg(short, long)]
    m: usize,
    #[arg(short, long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Flat key = value config file.
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory. Defaults to the config's `output_dir`, then
    /// `<root>/<config stem>`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = "runs")]
    root: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    counts: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

enum Failure {
    Core(Error),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 3,
        Error::NotHermitian(_) | Error::InvalidExpectation(_) | Error::AllClipped => 2,
        _ => 1,
    }
}

type CliResult = std::result::Result<(), Failure>;

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::io(path, source))
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::io(parent, source))?;
    }
    fs::write(path, contents).map_err(|source| Error::io(path, source))
}

fn parse_shots(s: &str) -> Result<Shots, Error> {
    if s == "exact" {
        return Ok(Shots::Exact);
    }
    match s.parse::<u64>() {
        Ok(l) if l > 0 => Ok(Shots::Sampled(l)),
        _ => Err(Error::Config(format!("shots must be a positive integer or \"exact\", got {s:?}"))),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset, Error> {
    Dataset::from_json(&read(path)?)
}

fn simulate(a: SimulateArgs) -> CliResult {
    let cfg = ExperimentConfig {
        state: a.state.parse::<StateKind>().map_err(|e| Error::Config(e.to_string()))?,
        k: a.k,
        rank: a.rank,
        kappa: a.kappa,
        m: a.m,
        shots: parse_shots(&a.shots)?,
        seed: a.seed,
        solver: SolverOptions::with_rank(a.rank),
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    let seeds = cfg.seeds();
    let spec = cfg.state_spec();
    let state = spec.build()?;
    let ensemble = SensingEnsemble::sample_with(cfg.k, cfg.m, seeds.ensemble, cfg.sampling)?;
    let mv = build_measurement(&state, &ensemble, cfg.shots, seeds.measurement)?;
    write(&a.output, &Dataset::new(&ensemble, &mv, Some(spec)).to_json()?)?;
    println!("wrote {} ({} measurements, d = {})", a.output.display(), ensemble.len(), ensemble.dim());
    Ok(())
}

fn solve(a: SolveArgs) -> CliResult {
    let data = load_dataset(&a.data)?;
    let (ensemble, mv) = data.parts()?;
    let truth = data.truth.as_ref().map(|s| s.build()).transpose()?;
    let opts = SolverOptions {
        rank: a.rank,
        max_iters: a.max_iters,
        stop_tol: a.stop_tol,
        record_timing: a.timing,
        ..SolverOptions::default()
    };
    let out = qtomo_core::rgd::solve(&mv.y, &ensemble, &opts, truth.as_ref().map(|t| t.factor()))?;
    write(&a.output, &out.trace.to_csv())?;
    let mut report = json!({
        "iterations": out.trace.iterations(),
        "stop_reason": out.trace.stop_reason,
        "rank_collapse": out.trace.rank_collapse,
        "final_objective": out.trace.last().map(|r| r.objective),
    });
    if let Some(t) = &truth {
        report["metrics"] = serde_json::to_value(metrics(&out.estimate, t)?).map_err(Error::from)?;
    }
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    if out.trace.stop_reason == StopReason::NonFinite {
        return Err(Failure::Numerical("objective became non-finite".into()));
    }
    Ok(())
}

fn baseline(a: BaselineArgs) -> CliResult {
    let data = load_dataset(&a.data)?;
    let (ensemble, mv) = data.parts()?;
    let truth = data.truth.as_ref().map(|s| s.build()).transpose()?;
    let mus = a
        .mu
        .split(',')
        .map(|s| parse_number("mu", s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let start = qtomo_core::rgd::init(&mv.y, &ensemble, a.rank)?;
    let mut diverged = Vec::new();
    for (i, &mu) in mus.iter().enumerate() {
        let opts = BaselineOptions {
            rank: a.rank,
            eta: a.eta,
            mu,
            iters: a.iters,
            record_timing: false,
        };
        let out = mifgd_solve(&mv.y, &ensemble, &opts, Some(&start), truth.as_ref().map(|t| t.factor()))?;
        let path = a.out_dir.join(baseline_file_name(i, mu));
        write(&path, &out.trace.to_csv())?;
        println!(
            "mu = {mu:.4}: {} iterations, {:?}, objective {:.3e}",
            out.trace.iterations(),
            out.trace.stop_reason,
            out.trace.last().map_or(f64::NAN, |r| r.objective)
        );
        if out.diverged() || out.trace.stop_reason == StopReason::NonFinite {
            diverged.push(mu);
        }
    }
    if !diverged.is_empty() {
        return Err(Failure::Numerical(format!("diverged for mu = {diverged:?}")));
    }
    Ok(())
}

fn bound(a: BoundArgs) -> CliResult {
    let inputs = BoundInputs::new(
        a.r, a.sigma_1, a.sigma_r, a.lambda, a.delta_2r, a.delta_3r, a.rho_frob, a.init_err,
    )?;
    let series = gamma_recursion(&inputs, a.steps)?;
    let mut report = json!({
        "theta": inputs.theta(),
        "eta": inputs.eta(),
        "phi": inputs.phi(),
        "omega": inputs.omega(),
        "init_bound": inputs.init_bound(),
        "gamma": series,
    });
    if let Some(gb) = a.gamma_bar {
        report["gamma_bar"] = json!(gb);
        report["error_bound"] = json!(error_bound_series(&inputs, gb, a.k)?);
        report["certificate"] = json!(contraction_certificate(&inputs, gb, a.k as usize)?);
        if inputs.lambda > 0.0 {
            let (c0, c1, c2) = (a.constants[0], a.constants[1], a.constants[2]);
            report["iteration_estimate"] = json!(iteration_estimate(&inputs, gb, c0, c1, c2)?);
        }
    }
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    Ok(())
}

fn rip(a: RipArgs) -> CliResult {
    let ensemble = SensingEnsemble::sample(a.k, a.m, a.seed)?;
    let probe = rip_probe(&ensemble, a.r, a.trials, a.seed.wrapping_add(1))?;
    let report = json!({
        "k": a.k,
        "m": a.m,
        "r": a.r,
        "trials": a.trials,
        "ensemble_hash": ensemble.record().hash(),
        "delta_hat": probe.delta_hat,
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    Ok(())
}

fn bench(a: BenchArgs) -> CliResult {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
        cfg.state_seed = None;
        cfg.ensemble_seed = None;
        cfg.measurement_seed = None;
    }
    let out = a.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| {
        let stem = a.config.file_stem().map_or("experiment".into(), |s| s.to_string_lossy().into_owned());
        a.root.join(stem)
    });
    let summary = run_experiment(&cfg, &out)?;
    println!(
        "{}: rgd {} iterations ({:?}), frob_err_sq {:.3e}",
        out.display(),
        summary.rgd.iterations,
        summary.rgd.stop_reason,
        summary.rgd.metrics.frob_err_sq
    );
    for b in &summary.baselines {
        println!(
            "  mu = {:.4}: frob_err_sq {:.3e}{}",
            b.mu,
            b.run.metrics.frob_err_sq,
            if b.diverged { " (diverged)" } else { "" }
        );
    }
    if summary.any_diverged() {
        return Err(Failure::Numerical("a run diverged; see summary.json".into()));
    }
    Ok(())
}

fn decode(a: DecodeArgs) -> CliResult {
    let counts: CountsFile = serde_json::from_str(&read(&a.counts)?).map_err(Error::from)?;
    let data = counts.to_dataset()?;
    write(&a.output, &data.to_json()?)?;
    println!("wrote {} ({} measurements)", a.output.display(), data.y.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Solve(a) => solve(a),
        Command::Baseline(a) => baseline(a),
        Command::Bound(a) => bound(a),
        Command::RipProbe(a) => rip(a),
        Command::Bench(a) => bench(a),
        Command::Decode(a) => decode(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
