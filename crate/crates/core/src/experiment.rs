//! Experiment orchestration: config, artifact directory, summary.
//!
//! Config files are flat `key = value` text; `#` starts a comment. Lists are
//! comma separated and numbers may be written as fractions (`1/3`).
//!
//! ```text
//! state = hadamard
//! k = 6
//! m = 819
//! shots = 8192          # or "exact"
//! exact_reference = true
//! baseline_mu = 1/8, 1/4, 1/3, 1/2, 3/4
//! ```
//!
//! A run writes `config.txt`, `ensemble.json`, `dataset.json`,
//! `rgd_trace.csv`, optionally `exact_rgd_trace.csv`, one
//! `mifgd_<i>_mu_<μ>.csv` per momentum value, and `summary.json`. Output
//! depends only on the config (and its seeds).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, BaselineOptions};
use crate::bounds::{gamma_recursion, BoundInputs, GammaSeries};
use crate::error::{Error, Result};
use crate::factor::RankRFactor;
use crate::linalg::spectral_norm_hermitian;
use crate::metrics::{metrics, Metrics};
use crate::rgd::{self, SolverOptions};
use crate::sensing::{rip_probe, Sampling, SensingEnsemble};
use crate::simulator::{build_measurement, noise_bound_failure_probability, noise_bound_lambda, Dataset, Shots};
use crate::state::{DensityState, StateKind, StateSpec};
use crate::trace::{SolverTrace, StopReason};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "QTOMO_OUT";

/// Largest qubit count accepted by the experiment runner (dense `d × d`
/// adjoint per iteration).
pub const MAX_EXPERIMENT_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub state: StateKind,
    pub k: usize,
    pub rank: usize,
    pub kappa: f64,
    pub m: usize,
    pub shots: Shots,
    pub sampling: Sampling,
    /// Also run RGD on exact expectations.
    pub exact_reference: bool,
    pub seed: u64,
    pub state_seed: Option<u64>,
    pub ensemble_seed: Option<u64>,
    pub measurement_seed: Option<u64>,
    pub solver: SolverOptions,
    pub baseline_eta: f64,
    pub baseline_mus: Vec<f64>,
    pub baseline_iters: usize,
    /// Constant `C` in the measurement-noise bound.
    pub noise_c: f64,
    /// Trials for the restricted-isometry probe (0 skips it).
    pub rip_trials: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            state: StateKind::Hadamard,
            k: 6,
            rank: 1,
            kappa: 1.0,
            m: 819,
            shots: Shots::Sampled(8192),
            sampling: Sampling::WithReplacement,
            exact_reference: false,
            seed: 0,
            state_seed: None,
            ensemble_seed: None,
            measurement_seed: None,
            solver: SolverOptions::default(),
            baseline_eta: 0.01,
            baseline_mus: vec![1.0 / 8.0, 1.0 / 4.0, 1.0 / 3.0, 1.0 / 2.0, 3.0 / 4.0],
            baseline_iters: 300,
            noise_c: 2.0,
            rip_trials: 50,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub state: u64,
    pub ensemble: u64,
    pub measurement: u64,
}

/// Parses a decimal or a fraction such as `1/3`. `key` only labels the error.
pub fn parse_number(key: &str, v: &str) -> Result<f64> {
    let bad = || Error::Config(format!("{key}: cannot parse {v:?} as a number"));
    match v.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => v.parse().map_err(|_| bad()),
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?} as an integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl ExperimentConfig {
    /// Parses the flat `key = value` format. `state`, `k` and `m` are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().to_string();
            if seen.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key {key:?}")));
            }
        }
        for required in ["state", "k", "m"] {
            if !seen.contains_key(required) {
                return Err(Error::Config(format!("missing required key {required:?}")));
            }
        }
        let mut cfg = ExperimentConfig::default();
        let mut solver_rank = None;
        for (key, v) in &seen {
            let v = v.as_str();
            match key.as_str() {
                "state" => cfg.state = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "k" => cfg.k = parse_int(key, v)?,
                "rank" => cfg.rank = parse_int(key, v)?,
                "kappa" => cfg.kappa = parse_number(key, v)?,
                "m" => cfg.m = parse_int(key, v)?,
                "shots" => {
                    cfg.shots = if v == "exact" {
                        Shots::Exact
                    } else {
                        Shots::Sampled(parse_int(key, v)?)
                    }
                }
                "sampling" => {
                    cfg.sampling = match v {
                        "with_replacement" => Sampling::WithReplacement,
                        "without_replacement" => Sampling::WithoutReplacement,
                        _ => return Err(Error::Config(format!("sampling: unknown mode {v:?}"))),
                    }
                }
                "exact_reference" => cfg.exact_reference = parse_bool(key, v)?,
                "seed" => cfg.seed = parse_int(key, v)?,
                "state_seed" => cfg.state_seed = Some(parse_int(key, v)?),
                "ensemble_seed" => cfg.ensemble_seed = Some(parse_int(key, v)?),
                "measurement_seed" => cfg.measurement_seed = Some(parse_int(key, v)?),
                "solver_rank" => solver_rank = Some(parse_int(key, v)?),
                "max_iters" => cfg.solver.max_iters = parse_int(key, v)?,
                "stop_tol" => cfg.solver.stop_tol = parse_number(key, v)?,
                "objective_floor" => cfg.solver.objective_floor = parse_number(key, v)?,
                "record_timing" => cfg.solver.record_timing = parse_bool(key, v)?,
                "baseline_eta" => cfg.baseline_eta = parse_number(key, v)?,
                "baseline_mu" => {
                    cfg.baseline_mus = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split(',').map(|s| parse_number(key, s.trim())).collect::<Result<_>>()?
                    }
                }
                "baseline_iters" => cfg.baseline_iters = parse_int(key, v)?,
                "noise_c" => cfg.noise_c = parse_number(key, v)?,
                "rip_trials" => cfg.rip_trials = parse_int(key, v)?,
                "output_dir" => cfg.output_dir = Some(PathBuf::from(v)),
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.solver.rank = solver_rank.unwrap_or(cfg.rank);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k == 0 || self.k > MAX_EXPERIMENT_QUBITS {
            return fail(format!("k = {} must lie in 1..={MAX_EXPERIMENT_QUBITS}", self.k));
        }
        if self.m == 0 || self.m as u128 > 1u128 << (2 * self.k) {
            return fail(format!("m = {} must lie in 1..=4^k", self.m));
        }
        if self.shots == Shots::Sampled(0) {
            return fail("shots must be positive or \"exact\"".into());
        }
        if self.rank == 0 || self.rank > 1 << self.k {
            return fail(format!("rank {} out of range", self.rank));
        }
        if !(self.baseline_eta > 0.0) {
            return fail("baseline_eta must be positive".into());
        }
        if let Some(mu) = self.baseline_mus.iter().find(|mu| !(0.0..1.0).contains(*mu)) {
            return fail(format!("baseline momentum {mu} must lie in [0, 1)"));
        }
        if self.baseline_iters == 0 {
            return fail("baseline_iters must be at least 1".into());
        }
        if !(self.noise_c > 0.0) {
            return fail("noise_c must be positive".into());
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            ensemble: self.ensemble_seed.unwrap_or(self.seed),
            measurement: self.measurement_seed.unwrap_or(self.seed.wrapping_add(1)),
            state: self.state_seed.unwrap_or(self.seed.wrapping_add(2)),
        }
    }

    pub fn state_spec(&self) -> StateSpec {
        StateSpec {
            kind: self.state,
            k: self.k,
            rank: self.rank,
            kappa: self.kappa,
            seed: self.seeds().state,
        }
    }

    /// Canonical key/value form with every seed resolved.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let seeds = self.seeds();
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("state", self.state.to_string());
        put("k", self.k.to_string());
        put("rank", self.rank.to_string());
        put("kappa", self.kappa.to_string());
        put("m", self.m.to_string());
        put(
            "shots",
            match self.shots {
                Shots::Exact => "exact".into(),
                Shots::Sampled(l) => l.to_string(),
            },
        );
        put(
            "sampling",
            match self.sampling {
                Sampling::WithReplacement => "with_replacement".into(),
                Sampling::WithoutReplacement => "without_replacement".into(),
            },
        );
        put("exact_reference", self.exact_reference.to_string());
        put("seed", self.seed.to_string());
        put("state_seed", seeds.state.to_string());
        put("ensemble_seed", seeds.ensemble.to_string());
        put("measurement_seed", seeds.measurement.to_string());
        put("solver_rank", self.solver.rank.to_string());
        put("max_iters", self.solver.max_iters.to_string());
        put("stop_tol", self.solver.stop_tol.to_string());
        put("objective_floor", self.solver.objective_floor.to_string());
        put("record_timing", self.solver.record_timing.to_string());
        put("baseline_eta", self.baseline_eta.to_string());
        put(
            "baseline_mu",
            self.baseline_mus.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
        );
        put("baseline_iters", self.baseline_iters.to_string());
        put("noise_c", self.noise_c.to_string());
        put("rip_trials", self.rip_trials.to_string());
        m
    }

    pub fn to_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub file: String,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub rank_collapse: bool,
    pub final_objective: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub mu: f64,
    pub eta: f64,
    pub diverged: bool,
    pub run: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySummary {
    pub noise_c: f64,
    /// `√(C d(d+1) ln d/(m l))`; absent for exact data.
    pub lambda_bound: Option<f64>,
    pub failure_probability: f64,
    /// `‖A†(y − A(ρ))‖` measured against the known truth.
    pub measured_noise_spectral: f64,
    pub delta_hat_2r: Option<f64>,
    pub delta_hat_3r: Option<f64>,
    pub init_err: f64,
    /// `2δ̂_2r‖ρ‖_F + 2√(2r) λ_measured`; uses probe lower bounds.
    pub init_bound: Option<f64>,
    pub gamma: Option<GammaSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub seeds: Seeds,
    pub ensemble_hash: String,
    pub d: usize,
    pub m: usize,
    pub shots: Option<u64>,
    pub rgd: RunSummary,
    pub exact_rgd: Option<RunSummary>,
    pub baselines: Vec<BaselineSummary>,
    pub theory: TheorySummary,
}

impl ExperimentSummary {
    pub fn any_diverged(&self) -> bool {
        self.baselines.iter().any(|b| b.diverged)
            || self.rgd.stop_reason == StopReason::NonFinite
            || self.exact_rgd.as_ref().is_some_and(|r| r.stop_reason == StopReason::NonFinite)
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn run_summary(trace: &SolverTrace, estimate: &RankRFactor, truth: &DensityState, file: &str) -> Result<RunSummary> {
    Ok(RunSummary {
        method: trace.method.clone(),
        file: file.to_string(),
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason,
        rank_collapse: trace.rank_collapse,
        final_objective: trace.last().map_or(f64::NAN, |r| r.objective),
        metrics: metrics(estimate, truth)?,
    })
}

/// `A A†` in eigen-form.
fn factor_of_product(a: &nalgebra::DMatrix<crate::C64>) -> Result<RankRFactor> {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let lambdas = svd.singular_values.map(|s| s * s);
    RankRFactor::new(u, lambdas)
}

/// File name for the `i`-th momentum baseline.
pub fn baseline_file_name(index: usize, mu: f64) -> String {
    format!("mifgd_{index}_mu_{mu:.4}.csv")
}

/// Runs the full protocol and writes the artifact directory `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentSummary> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let seeds = config.seeds();
    let spec = config.state_spec();
    let truth = spec.build()?;
    let ensemble = SensingEnsemble::sample_with(config.k, config.m, seeds.ensemble, config.sampling)?;
    let record = ensemble.record();
    let measurement = build_measurement(&truth, &ensemble, config.shots, seeds.measurement)?;
    let dataset = Dataset::new(&ensemble, &measurement, Some(spec.clone()));

    write_file(out_dir, "config.txt", &config.to_text())?;
    write_file(out_dir, "ensemble.json", &serde_json::to_string_pretty(&record)?)?;
    write_file(out_dir, "dataset.json", &dataset.to_json()?)?;

    let y = &measurement.y;
    let rgd_out = rgd::solve(y, &ensemble, &config.solver, Some(truth.factor()))?;
    write_file(out_dir, "rgd_trace.csv", &rgd_out.trace.to_csv())?;
    let rgd_summary = run_summary(&rgd_out.trace, &rgd_out.estimate, &truth, "rgd_trace.csv")?;

    let exact_rgd = if config.exact_reference {
        let exact = build_measurement(&truth, &ensemble, Shots::Exact, seeds.measurement)?;
        let out = rgd::solve(&exact.y, &ensemble, &config.solver, Some(truth.factor()))?;
        write_file(out_dir, "exact_rgd_trace.csv", &out.trace.to_csv())?;
        let mut s = run_summary(&out.trace, &out.estimate, &truth, "exact_rgd_trace.csv")?;
        s.method = "exact-rgd".into();
        Some(s)
    } else {
        None
    };

    let x0 = rgd::init(y, &ensemble, config.solver.rank)?;
    let baselines = config
        .baseline_mus
        .par_iter()
        .enumerate()
        .map(|(i, &mu)| -> Result<BaselineSummary> {
            let opts = BaselineOptions {
                rank: config.solver.rank,
                eta: config.baseline_eta,
                mu,
                iters: config.baseline_iters,
                record_timing: config.solver.record_timing,
            };
            let out = baselines::mifgd_solve(y, &ensemble, &opts, Some(&x0), Some(truth.factor()))?;
            let file = baseline_file_name(i, mu);
            write_file(out_dir, &file, &out.trace.to_csv())?;
            let estimate = factor_of_product(&out.iterate.a)?;
            Ok(BaselineSummary {
                mu,
                eta: config.baseline_eta,
                diverged: out.diverged(),
                run: run_summary(&out.trace, &estimate, &truth, &file)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let theory = theory_summary(config, &ensemble, &truth, y, &x0, seeds)?;
    let summary = ExperimentSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.to_map(),
        seeds,
        ensemble_hash: record.hash(),
        d: ensemble.dim(),
        m: ensemble.len(),
        shots: config.shots.per_pauli(),
        rgd: rgd_summary,
        exact_rgd,
        baselines,
        theory,
    };
    write_file(out_dir, "summary.json", &serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn theory_summary(
    config: &ExperimentConfig,
    ensemble: &SensingEnsemble,
    truth: &DensityState,
    y: &DVector<f64>,
    x0: &RankRFactor,
    seeds: Seeds,
) -> Result<TheorySummary> {
    let d = ensemble.dim();
    let r = config.solver.rank;
    let noise = y - ensemble.forward(truth.factor())?;
    let measured = spectral_norm_hermitian(&ensemble.adjoint(&noise)?);
    let probe = |rank: usize, salt: u64| -> Result<Option<f64>> {
        if config.rip_trials == 0 || rank > d {
            return Ok(None);
        }
        Ok(Some(rip_probe(ensemble, rank, config.rip_trials, seeds.ensemble ^ salt)?.delta_hat))
    };
    let delta_2r = probe(2 * r, 0x2)?;
    let delta_3r = probe(3 * r, 0x3)?;
    let init_err = x0.frobenius_dist_sq(truth.factor()).sqrt();
    let rho_frob = truth.factor().frobenius_norm();
    let lambdas = truth.lambdas();
    let mut init_bound = None;
    let mut gamma = None;
    if let (Some(d2), Some(d3)) = (delta_2r, delta_3r) {
        init_bound = Some(2.0 * d2 * rho_frob + 2.0 * (2.0 * r as f64).sqrt() * measured);
        if d2 < 1.0 && d3 < 1.0 {
            let inputs = BoundInputs::new(
                r,
                lambdas[0],
                lambdas[lambdas.len() - 1],
                measured,
                d2,
                d3,
                rho_frob,
                init_err,
            )?;
            gamma = Some(gamma_recursion(&inputs, 10)?);
        }
    }
    Ok(TheorySummary {
        noise_c: config.noise_c,
        lambda_bound: config
            .shots
            .per_pauli()
            .map(|l| noise_bound_lambda(d, ensemble.len(), l, config.noise_c)),
        failure_probability: noise_bound_failure_probability(d, config.noise_c),
        measured_noise_spectral: measured,
        delta_hat_2r: delta_2r,
        delta_hat_3r: delta_3r,
        init_err,
        init_bound,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "
        # small smoke configuration
        state = ghz
        k = 3
        m = 40
        shots = 256
        exact_reference = true
        seed = 7
        baseline_mu = 1/8, 1/2
        baseline_iters = 20
        rip_trials = 5
    ";

    #[test]
    fn parse_config() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        assert_eq!(cfg.state, StateKind::Ghz);
        assert_eq!(cfg.shots, Shots::Sampled(256));
        assert_eq!(cfg.baseline_mus, vec![0.125, 0.5]);
        assert_eq!(cfg.seeds(), Seeds { state: 9, ensemble: 7, measurement: 8 });
        let again = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again.to_map(), cfg.to_map());
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ExperimentConfig::parse("k = 3\nm = 4"), Err(Error::Config(_))));
        assert!(ExperimentConfig::parse("state = ghz\nk = 2\nm = 17").is_err());
        assert!(ExperimentConfig::parse("state = ghz\nk = 2\nm = 4\nbogus = 1").is_err());
        assert!(ExperimentConfig::parse("state = ghz\nk = 2\nm = 4\nm = 5").is_err());
        assert!(ExperimentConfig::parse("state = ghz\nk = 2\nm = 4\nbaseline_mu = 1").is_err());
        assert!(ExperimentConfig::parse("state = ghz\nk = 2\nm = 4\nshots = 0").is_err());
        assert!(ExperimentConfig::parse("state = ghz\nk = 2\nm = 4\nkappa = 1/0").is_err());
        assert!(ExperimentConfig::parse("state = ghz\nk = 2\nm = 4\nnot a pair").is_err());
    }

    #[test]
    fn run_writes_artifacts_deterministically() {
        let cfg = ExperimentConfig::parse(SMALL).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let sa = run_experiment(&cfg, a.path()).unwrap();
        let sb = run_experiment(&cfg, b.path()).unwrap();
        assert_eq!(sa, sb);
        let mut names: Vec<String> = fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            [
                "config.txt",
                "dataset.json",
                "ensemble.json",
                "exact_rgd_trace.csv",
                "mifgd_0_mu_0.1250.csv",
                "mifgd_1_mu_0.5000.csv",
                "rgd_trace.csv",
                "summary.json"
            ]
        );
        for name in &names {
            let x = fs::read(a.path().join(name)).unwrap();
            let y = fs::read(b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name} differs between runs");
        }
        assert_eq!(sa.seeds.ensemble, 7);
        assert_eq!(sa.ensemble_hash.len(), 64);
        assert!(sa.theory.lambda_bound.is_some());
        assert!(sa.exact_rgd.is_some());
        let text = fs::read_to_string(a.path().join("summary.json")).unwrap();
        for key in ["\"state\": 9", "\"ensemble\": 7", "\"measurement\": 8", "ensemble_hash"] {
            assert!(text.contains(key), "summary lacks {key}");
        }
    }
}
