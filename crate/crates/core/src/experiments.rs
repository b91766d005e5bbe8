//! Attack-experiment harness: repeated trials with shared starts, one
//! problem instance per trial, the three algorithms run sequentially per
//! trial for comparable timing, trials spread over a worker pool.
//!
//! Per trial i the instance seed is seed0 + i; the shared start is drawn
//! from a separate stream derived from the same seed. An algorithm run
//! stops as soon as both stationarity measures of the original game are at
//! or below the threshold (the raw-measure convention: both <= threshold),
//! or when a budget binds. Trials that exhaust their budget count against
//! the success rate but do not enter the time statistics. With the time
//! budget left slack, identical specs reproduce trial records bit for bit.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_pda, run_sda, BaselineParams};
use crate::error::{Error, Result};
use crate::linalg::{fnv1a, hash_f64s, Vector};
use crate::problem::{make_lasso_attack, MinMaxProblem};
use crate::rng::{normal_vector, rng_from_seed};
use crate::solver::{g_value_high_accuracy, solve, SolverParams, StoppingRule};
use crate::trace::RunTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// The multi-step accelerated method.
    Pa,
    /// Subgradient descent-ascent.
    Sda,
    /// Single-step proximal descent-ascent.
    Pda,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pa => "pa",
            Algorithm::Sda => "sda",
            Algorithm::Pda => "pda",
        }
    }
}

/// Practical parameterization of the multi-step method for benchmark runs.
/// The theoretical step sizes and iteration counts are far too conservative
/// at benchmark scale (the worst-case constants are loose by orders of
/// magnitude on generated instances), so the harness uses these documented
/// defaults instead; every field can be overridden from the config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaSettings {
    /// Target accuracy; 0 means sqrt(threshold) so that eps^2 = threshold.
    pub epsilon: f64,
    /// Outer step = eta2_scale / l11; 0 means the theoretical 1/(l11 + l12^2/lambda).
    pub eta2_scale: f64,
    /// Cap on the momentum block length N; 0 means uncapped.
    pub max_restart: usize,
    /// Inner steps per outer iteration, in blocks of N.
    pub blocks: usize,
}

impl Default for PaSettings {
    fn default() -> Self {
        PaSettings { epsilon: 0.0, eta2_scale: 0.25, max_restart: 64, blocks: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub m: usize,
    pub n: usize,
    pub sparsity: usize,
    pub xi: f64,
    pub delta: f64,
    pub noise_std: f64,
    pub algorithms: Vec<Algorithm>,
    pub n_trials: usize,
    /// Applied directly to both measures: success means
    /// stat_x <= threshold and stat_y <= threshold.
    pub threshold: f64,
    pub seed0: u64,
    /// Per-run cap on top-level iterations (outer iterations for the
    /// multi-step method). This is the deterministic budget.
    pub budget_iters: usize,
    /// Per-run wall-clock safety net in seconds.
    pub budget_seconds: f64,
    pub pa: PaSettings,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            m: 20,
            n: 100,
            sparsity: 5,
            xi: 1.0,
            delta: 0.1,
            noise_std: 0.001f64.sqrt(),
            algorithms: vec![Algorithm::Pa, Algorithm::Sda, Algorithm::Pda],
            n_trials: 20,
            threshold: 0.1,
            seed0: 1,
            budget_iters: 100_000,
            budget_seconds: 600.0,
            pa: PaSettings::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::InvalidArgument("threshold must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("at least one algorithm required".into()));
        }
        if self.budget_iters == 0 {
            return Err(Error::InvalidArgument("budget_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> u64 {
        let text = serde_json::to_string(self).unwrap_or_default();
        fnv1a(text.as_bytes())
    }

    fn pa_epsilon(&self) -> f64 {
        if self.pa.epsilon > 0.0 {
            self.pa.epsilon
        } else {
            self.threshold.sqrt()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgRecord {
    pub algorithm: Algorithm,
    pub hit_threshold: bool,
    pub iters_to_threshold: Option<usize>,
    pub grad_calls_to_threshold: Option<u64>,
    pub time_to_threshold: Option<f64>,
    pub final_stat_x: f64,
    pub final_stat_y: f64,
    pub total_iters: usize,
    pub total_grad_calls: u64,
    pub total_time: f64,
    pub start_hash: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub error: Option<String>,
    pub algs: Vec<AlgRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgSummary {
    pub algorithm: Algorithm,
    pub n_success: usize,
    pub success_rate: f64,
    /// Mean/std of time-to-threshold over successful trials only.
    pub mean_time: Option<f64>,
    pub std_time: Option<f64>,
    pub mean_grad_calls: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvMeta {
    pub host: String,
    pub timestamp_unix: u64,
    pub build: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub spec_hash: u64,
    pub trials: Vec<TrialRecord>,
    pub summaries: Vec<AlgSummary>,
    pub env: EnvMeta,
}

impl ExperimentResult {
    pub fn summary_for(&self, alg: Algorithm) -> Option<&AlgSummary> {
        self.summaries.iter().find(|s| s.algorithm == alg)
    }

    /// Fingerprint of the deterministic trial fields (times excluded).
    pub fn determinism_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for t in &self.trials {
            hash_f64s(&mut h, &[t.trial as f64, t.seed as f64]);
            for a in &t.algs {
                hash_f64s(
                    &mut h,
                    &[
                        a.hit_threshold as u64 as f64,
                        a.iters_to_threshold.map(|v| v as f64).unwrap_or(-1.0),
                        a.grad_calls_to_threshold.map(|v| v as f64).unwrap_or(-1.0),
                        a.final_stat_x,
                        a.final_stat_y,
                        a.total_iters as f64,
                        a.total_grad_calls as f64,
                        a.start_hash as f64,
                    ],
                );
            }
        }
        h
    }
}

/// Practical solver parameters for one attack run; see [`PaSettings`].
pub fn pa_params_for(problem: &MinMaxProblem, spec: &ExperimentSpec) -> SolverParams {
    let c = problem.constants();
    let epsilon = spec.pa_epsilon();
    let lambda = c.l22.min(epsilon / (2.0 * (2.0f64).sqrt() * c.radius));
    let n_theory = ((8.0 * (c.l22 + lambda) / lambda).sqrt() - 1.0).ceil().max(1.0) as usize;
    let n_restart = if spec.pa.max_restart > 0 {
        n_theory.min(spec.pa.max_restart)
    } else {
        n_theory
    };
    let eta2 = if spec.pa.eta2_scale > 0.0 {
        spec.pa.eta2_scale / c.l11
    } else {
        1.0 / (c.l11 + c.l12 * c.l12 / lambda)
    };
    SolverParams {
        eta1: 1.0 / (c.l22 + lambda),
        eta2,
        n_restart,
        k_inner: n_restart * spec.pa.blocks.max(1),
        t_outer: spec.budget_iters,
        lambda,
        epsilon,
        alpha_hat: None, // defaults to the shared start inside solve
    }
}

/// Shared start for one trial: the design matrix nudged to half the
/// perturbation radius in a random direction, and small random weights.
pub fn shared_start(problem: &MinMaxProblem, seed: u64) -> (Vector, Vector) {
    let (dt, da) = problem.dims();
    let mut rng = rng_from_seed(seed ^ 0x5851_f42d_4c95_7f2d);
    let dir = normal_vector(&mut rng, dt, 1.0);
    let n = dir.norm().max(1e-12);
    let radius = problem.constants().radius;
    let scale = match problem.lasso_parts() {
        Some(g) => 0.5 * g.delta.sqrt(),
        None => 0.25 * radius,
    };
    let center = match problem.lasso_parts() {
        Some(g) => Vector::from_slice(g.a_hat.data()),
        None => Vector::zeros(dt),
    };
    let theta0 = problem.project_theta(&center.add_scaled(scale / n, &dir));
    let alpha0 = problem.project_alpha(&normal_vector(&mut rng, da, 0.1));
    (theta0, alpha0)
}

fn run_one_algorithm(
    problem: &MinMaxProblem,
    spec: &ExperimentSpec,
    alg: Algorithm,
    theta0: &Vector,
    alpha0: &Vector,
) -> Result<(RunTrace, f64)> {
    let stop = StoppingRule {
        target_max_measure: Some(spec.threshold),
        max_outer: Some(spec.budget_iters),
        max_seconds: Some(spec.budget_seconds),
        record_iterates: false,
    };
    problem.reset_counts();
    let t0 = Instant::now();
    let trace = match alg {
        Algorithm::Pa => {
            let params = pa_params_for(problem, spec);
            solve(problem, theta0, alpha0, &params, &stop)?
        }
        Algorithm::Sda => {
            let params = BaselineParams::sda_defaults(problem, spec.budget_iters);
            run_sda(problem, theta0, alpha0, &params, &stop)?
        }
        Algorithm::Pda => {
            let params = BaselineParams::pda_defaults(problem, spec.budget_iters);
            run_pda(problem, theta0, alpha0, &params, &stop)?
        }
    };
    Ok((trace, t0.elapsed().as_secs_f64()))
}

fn record_from_trace(alg: Algorithm, trace: &RunTrace, total_time: f64, threshold: f64) -> AlgRecord {
    let hit = trace.first_hit(threshold);
    let last = trace.rows.last();
    AlgRecord {
        algorithm: alg,
        hit_threshold: hit.is_some(),
        iters_to_threshold: hit.map(|i| i + 1),
        grad_calls_to_threshold: hit.map(|i| trace.rows[i].grad_calls),
        time_to_threshold: hit.map(|i| trace.rows[i].wall_time),
        final_stat_x: last.map(|r| r.stat_x).unwrap_or(f64::NAN),
        final_stat_y: last.map(|r| r.stat_y).unwrap_or(f64::NAN),
        total_iters: trace.rows.len(),
        total_grad_calls: trace.total_grad_calls(),
        total_time,
        start_hash: trace.meta.start_hash,
    }
}

/// Run one trial end to end: generate the instance, draw the shared start,
/// run each requested algorithm sequentially, optionally persisting traces.
pub fn run_trial(spec: &ExperimentSpec, trial: usize, out_dir: Option<&Path>) -> TrialRecord {
    let seed = spec.seed0.wrapping_add(trial as u64);
    let built = make_lasso_attack(
        spec.m,
        spec.n,
        spec.sparsity,
        spec.xi,
        spec.delta,
        spec.noise_std,
        seed,
    );
    let problem = match built {
        Ok(p) => p,
        Err(e) => {
            return TrialRecord { trial, seed, error: Some(e.to_string()), algs: Vec::new() }
        }
    };
    let (theta0, alpha0) = shared_start(&problem, seed);
    let mut algs = Vec::new();
    let mut error = None;
    for &alg in &spec.algorithms {
        match run_one_algorithm(&problem, spec, alg, &theta0, &alpha0) {
            Ok((trace, total_time)) => {
                if let Some(dir) = out_dir {
                    let trial_dir = dir.join(format!("trial-{trial}"));
                    let _ = std::fs::create_dir_all(&trial_dir);
                    let _ = trace.write_csv(&trial_dir.join(format!("{}_trace.csv", alg.name())));
                    let _ = trace.write_meta(&trial_dir.join(format!("{}_meta.json", alg.name())));
                }
                algs.push(record_from_trace(alg, &trace, total_time, spec.threshold));
            }
            Err(e) => {
                error = Some(format!("{}: {e}", alg.name()));
                break;
            }
        }
    }
    TrialRecord { trial, seed, error, algs }
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), Some(0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

fn summarize(spec: &ExperimentSpec, trials: &[TrialRecord]) -> Vec<AlgSummary> {
    spec.algorithms
        .iter()
        .map(|&alg| {
            let records: Vec<&AlgRecord> = trials
                .iter()
                .flat_map(|t| t.algs.iter())
                .filter(|a| a.algorithm == alg)
                .collect();
            let times: Vec<f64> = records.iter().filter_map(|a| a.time_to_threshold).collect();
            let grads: Vec<f64> = records
                .iter()
                .filter_map(|a| a.grad_calls_to_threshold.map(|g| g as f64))
                .collect();
            let n_success = times.len();
            let (mean_time, std_time) = mean_std(&times);
            let (mean_grad_calls, _) = mean_std(&grads);
            AlgSummary {
                algorithm: alg,
                n_success,
                success_rate: n_success as f64 / spec.n_trials as f64,
                mean_time,
                std_time,
                mean_grad_calls,
            }
        })
        .collect()
}

/// Run every trial on a bounded worker pool (algorithms within a trial stay
/// sequential) and aggregate. When `out_dir` is given, per-trial traces and
/// the result files are written beneath `out_dir/results/<spec-hash>/`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<ExperimentResult> {
    spec.validate()?;
    let results_dir = out_dir.map(|d| d.join("results").join(format!("{:016x}", spec.hash())));
    if let Some(d) = &results_dir {
        std::fs::create_dir_all(d)?;
    }
    let slots: Vec<Mutex<Option<TrialRecord>>> =
        (0..spec.n_trials).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(spec.n_trials)
        .max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= spec.n_trials {
                    break;
                }
                let rec = run_trial(spec, i, results_dir.as_deref());
                *slots[i].lock().unwrap() = Some(rec);
            });
        }
    });
    let trials: Vec<TrialRecord> = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("worker filled every slot"))
        .collect();
    let summaries = summarize(spec, &trials);
    let result = ExperimentResult {
        spec: spec.clone(),
        spec_hash: spec.hash(),
        trials,
        summaries,
        env: EnvMeta {
            host: std::env::var("HOSTNAME").unwrap_or_else(|_| "unknown".into()),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            build: env!("CARGO_PKG_VERSION").into(),
        },
    };
    if let Some(d) = &results_dir {
        write_results(&result, d)?;
    }
    Ok(result)
}

/// Persist the aggregate files: `summary.csv` with one row per algorithm,
/// `trials.csv` with one row per (trial, algorithm), and `result.json` with
/// everything including environment metadata.
pub fn write_results(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut summary = String::from("algorithm,n_success,success_rate,mean_time,std_time,mean_grad_calls\n");
    for s in &result.summaries {
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.algorithm.name(),
            s.n_success,
            s.success_rate,
            s.mean_time.map(|v| v.to_string()).unwrap_or_default(),
            s.std_time.map(|v| v.to_string()).unwrap_or_default(),
            s.mean_grad_calls.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    std::fs::write(dir.join("summary.csv"), summary)?;

    let mut rows = String::from(
        "trial,seed,algorithm,hit,iters_to_threshold,grad_calls_to_threshold,time_to_threshold,final_stat_x,final_stat_y,total_iters,total_grad_calls,total_time\n",
    );
    for t in &result.trials {
        for a in &t.algs {
            rows.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                t.trial,
                t.seed,
                a.algorithm.name(),
                a.hit_threshold,
                a.iters_to_threshold.map(|v| v.to_string()).unwrap_or_default(),
                a.grad_calls_to_threshold.map(|v| v.to_string()).unwrap_or_default(),
                a.time_to_threshold.map(|v| v.to_string()).unwrap_or_default(),
                a.final_stat_x,
                a.final_stat_y,
                a.total_iters,
                a.total_grad_calls,
                a.total_time,
            ));
        }
    }
    std::fs::write(dir.join("trials.csv"), rows)?;

    let json = serde_json::to_string_pretty(result).map_err(|e| Error::Format {
        location: dir.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(dir.join("result.json"), json)?;
    Ok(())
}

/// Write the two aligned comparison tables for a set of runs on one shared
/// instance: the objective curve (the inner minimum recomputed to high
/// accuracy at every recorded iterate) and the two stationarity measures
/// per iteration. Traces must carry recorded iterates and must all stem
/// from the given problem instance.
pub fn emit_figure_data(
    problem: &MinMaxProblem,
    traces: &[(String, &RunTrace)],
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("no traces given".into()));
    }
    for (label, t) in traces {
        if t.meta.problem_hash != problem.hash() {
            return Err(Error::InvalidArgument(format!(
                "trace {label:?} stems from a different problem instance"
            )));
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let max_len = traces.iter().map(|(_, t)| t.rows.len()).max().unwrap_or(0);

    // Objective table: g at theta_t via a fresh high-accuracy inner solve.
    let mut objective = String::from("iteration");
    for (label, _) in traces {
        objective.push(',');
        objective.push_str(label);
    }
    objective.push('\n');
    let tol = 1e-8 * (1.0 + problem.constants().grad_alpha_bound);
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for (label, t) in traces {
        let thetas = t.thetas.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("trace {label:?} has no recorded iterates"))
        })?;
        let mut hint = t.start_alpha.clone();
        let mut curve = Vec::with_capacity(thetas.len());
        for theta in thetas {
            let (g, alpha_star) = g_value_high_accuracy(problem, theta, &hint, tol, 500_000)?;
            hint = alpha_star;
            curve.push(problem.reported_objective(g));
        }
        curves.push(curve);
    }
    for i in 0..max_len {
        objective.push_str(&i.to_string());
        for curve in &curves {
            objective.push(',');
            if let Some(v) = curve.get(i) {
                objective.push_str(&v.to_string());
            }
        }
        objective.push('\n');
    }
    let obj_path = out_dir.join("objective.csv");
    std::fs::write(&obj_path, objective)?;

    // Measures table straight from the recorded rows.
    let mut measures = String::from("iteration");
    for (label, _) in traces {
        measures.push_str(&format!(",{label}_stat_x,{label}_stat_y"));
    }
    measures.push('\n');
    for i in 0..max_len {
        measures.push_str(&i.to_string());
        for (_, t) in traces {
            match t.rows.get(i) {
                Some(r) => measures.push_str(&format!(",{},{}", r.stat_x, r.stat_y)),
                None => measures.push_str(",,"),
            }
        }
        measures.push('\n');
    }
    let mea_path = out_dir.join("measures.csv");
    std::fs::write(&mea_path, measures)?;
    Ok((obj_path, mea_path))
}
