//! Command-line front end: generate problem instances, run the solvers,
//! compute stationarity reports, drive benchmark experiments, and validate
//! trace files. The library surface exists so the binary and the tests
//! share one dispatch path.

pub mod config;

use std::path::{Path, PathBuf};

use config::{parse_config, ConfigFile, SolverConfig};
use minmax_core::experiments::{
    pa_params_for, run_experiment, Algorithm, ExperimentSpec, PaSettings,
};
use minmax_core::problem::MinMaxProblem;
use minmax_core::solver::{
    derive_params_concave, derive_params_strongly_concave, estimate_gaps, solve, SolverParams,
    StoppingRule,
};
use minmax_core::stationarity;
use minmax_core::trace::validate_trace_csv;
use minmax_core::{Error, Vector};

const USAGE: &str = "\
usage: minmax <command> [options]

commands:
  generate    build a problem instance from [problem] and write problem.toml
  solve       run the multi-step solver on a problem, write trace + metadata
  measure     stationarity report at a point given via --point
  experiment  run the benchmark sweep described by [experiment]
  validate    check trace CSV files against the schema

options:
  --config <file>        config file (TOML, versioned schema)
  --problem <file>       load a serialized problem instead of generating one
  --point <file>         point CSV (player,index,value) for measure
  --start <file>         point CSV overriding the default start for solve
  --out <dir>            output directory (default: $MINMAX_OUT_DIR or ./minmax-out)
  --epsilon <e>          target accuracy (solver.epsilon)
  --seed <n>             problem seed / experiment seed0
  --algorithms <list>    comma list of pa,sda,pda (experiment)
  --trials <n>           experiment trial count
  --threshold <v>        experiment stationarity threshold
  --budget-iters <n>     iteration budget per run
  --budget-seconds <s>   wall-clock budget per run
  --strict-theory        run the fully derived iteration counts, no early exit
  --set <key=value>      override any config field (repeatable), e.g.
                         --set solver.eta2=0.01 --set experiment.pa.blocks=4
  -v                     more detail on stderr
  --help                 this text

exit codes: 0 success, 1 usage/validation error, 2 numerical failure.
";

struct Cli {
    verb: String,
    config: Option<PathBuf>,
    problem: Option<PathBuf>,
    point: Option<PathBuf>,
    start: Option<PathBuf>,
    out: Option<PathBuf>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    algorithms: Option<String>,
    trials: Option<usize>,
    threshold: Option<f64>,
    budget_iters: Option<usize>,
    budget_seconds: Option<f64>,
    strict_theory: bool,
    sets: Vec<(String, String)>,
    positional: Vec<String>,
    verbose: bool,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NonFinite { .. } | Error::NoConvergence { .. } => 2,
        _ => 1,
    }
}

/// Parse argv (excluding the binary name) and run; returns the process exit
/// code.
pub fn dispatch(args: &[String]) -> i32 {
    let cli = match parse_args(args) {
        Ok(Some(cli)) => cli,
        Ok(None) => {
            print!("{USAGE}");
            return 0;
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            return 1;
        }
    };
    let result = match cli.verb.as_str() {
        "generate" => cmd_generate(&cli),
        "solve" => cmd_solve(&cli),
        "measure" => cmd_measure(&cli),
        "experiment" => cmd_experiment(&cli),
        "validate" => cmd_validate(&cli),
        other => {
            eprintln!("error: unknown command {other:?}");
            eprint!("{USAGE}");
            return 1;
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn parse_args(args: &[String]) -> std::result::Result<Option<Cli>, String> {
    let mut cli = Cli {
        verb: String::new(),
        config: None,
        problem: None,
        point: None,
        start: None,
        out: None,
        epsilon: None,
        seed: None,
        algorithms: None,
        trials: None,
        threshold: None,
        budget_iters: None,
        budget_seconds: None,
        strict_theory: false,
        sets: Vec::new(),
        positional: Vec::new(),
        verbose: false,
    };
    let mut it = args.iter();
    match it.next() {
        Some(v) if v == "--help" || v == "-h" => return Ok(None),
        Some(v) => cli.verb = v.clone(),
        None => return Err("missing command".into()),
    }
    while let Some(arg) = it.next() {
        let mut value = |name: &str| -> std::result::Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("{name} needs a value"))
        };
        match arg.as_str() {
            "--config" => cli.config = Some(PathBuf::from(value("--config")?)),
            "--problem" => cli.problem = Some(PathBuf::from(value("--problem")?)),
            "--point" => cli.point = Some(PathBuf::from(value("--point")?)),
            "--start" => cli.start = Some(PathBuf::from(value("--start")?)),
            "--out" => cli.out = Some(PathBuf::from(value("--out")?)),
            "--epsilon" => {
                cli.epsilon = Some(value("--epsilon")?.parse().map_err(|_| "bad --epsilon")?)
            }
            "--seed" => cli.seed = Some(value("--seed")?.parse().map_err(|_| "bad --seed")?),
            "--algorithms" => cli.algorithms = Some(value("--algorithms")?),
            "--trials" => cli.trials = Some(value("--trials")?.parse().map_err(|_| "bad --trials")?),
            "--threshold" => {
                cli.threshold = Some(value("--threshold")?.parse().map_err(|_| "bad --threshold")?)
            }
            "--budget-iters" => {
                cli.budget_iters =
                    Some(value("--budget-iters")?.parse().map_err(|_| "bad --budget-iters")?)
            }
            "--budget-seconds" => {
                cli.budget_seconds =
                    Some(value("--budget-seconds")?.parse().map_err(|_| "bad --budget-seconds")?)
            }
            "--strict-theory" => cli.strict_theory = true,
            "--set" => {
                let kv = value("--set")?;
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| format!("--set expects key=value, got {kv:?}"))?;
                cli.sets.push((k.to_string(), v.to_string()));
            }
            "-v" | "--verbose" => cli.verbose = true,
            "--help" | "-h" => return Ok(None),
            other if other.starts_with('-') => return Err(format!("unknown flag {other:?}")),
            other => cli.positional.push(other.to_string()),
        }
    }
    Ok(Some(cli))
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var("MINMAX_OUT_DIR").ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("minmax-out"))
}

fn load_config(cli: &Cli) -> minmax_core::Result<ConfigFile> {
    let path = cli.config.as_ref().ok_or_else(|| {
        Error::InvalidArgument("this command needs --config <file>".into())
    })?;
    let text = std::fs::read_to_string(path)?;
    let mut sets = cli.sets.clone();
    // dedicated flags are sugar for --set on the canonical paths
    if let Some(e) = cli.epsilon {
        sets.push(("solver.epsilon".into(), e.to_string()));
    }
    if cli.strict_theory {
        sets.push(("solver.strict_theory".into(), "true".into()));
    }
    if let Some(b) = cli.budget_iters {
        sets.push(("solver.budget_iters".into(), b.to_string()));
    }
    if let Some(b) = cli.budget_seconds {
        sets.push(("solver.budget_seconds".into(), b.to_string()));
    }
    let mut cfg = parse_config(&text, &sets)?;
    if let Some(seed) = cli.seed {
        if let Some(p) = cfg.problem.as_mut() {
            p.set_seed(seed);
        }
        if let Some(e) = cfg.experiment.as_mut() {
            e.seed0 = seed;
        }
    }
    if let Some(e) = cfg.experiment.as_mut() {
        if let Some(t) = cli.trials {
            e.n_trials = t;
        }
        if let Some(t) = cli.threshold {
            e.threshold = t;
        }
        if let Some(b) = cli.budget_iters {
            e.budget_iters = b;
        }
        if let Some(b) = cli.budget_seconds {
            e.budget_seconds = b;
        }
        if let Some(list) = &cli.algorithms {
            e.algorithms = parse_algorithms(list)?;
        }
    }
    Ok(cfg)
}

fn parse_algorithms(list: &str) -> minmax_core::Result<Vec<Algorithm>> {
    list.split(',')
        .map(|s| match s.trim() {
            "pa" => Ok(Algorithm::Pa),
            "sda" => Ok(Algorithm::Sda),
            "pda" => Ok(Algorithm::Pda),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        })
        .collect()
}

fn obtain_problem(cli: &Cli, cfg: Option<&ConfigFile>) -> minmax_core::Result<MinMaxProblem> {
    if let Some(path) = &cli.problem {
        return MinMaxProblem::load(path);
    }
    let cfg = cfg.ok_or_else(|| Error::InvalidArgument("need --problem or --config".into()))?;
    let pc = cfg
        .problem
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("config has no [problem] table".into()))?;
    pc.build()
}

/// Point CSV: header `player,index,value`, players `theta` and `alpha`,
/// unspecified entries zero.
fn read_point_csv(path: &Path, dims: (usize, usize)) -> minmax_core::Result<(Vector, Vector)> {
    let text = std::fs::read_to_string(path)?;
    let mut theta = Vector::zeros(dims.0);
    let mut alpha = Vector::zeros(dims.1);
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line.trim() != "player,index,value" {
                return Err(Error::Format {
                    location: format!("{}:1", path.display()),
                    message: "expected header player,index,value".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Format {
                location: format!("{}:{}", path.display(), i + 1),
                message: "expected 3 fields".into(),
            });
        }
        let index: usize = fields[1].parse().map_err(|_| Error::Format {
            location: format!("{}:{}", path.display(), i + 1),
            message: format!("bad index {:?}", fields[1]),
        })?;
        let value: f64 = fields[2].parse().map_err(|_| Error::Format {
            location: format!("{}:{}", path.display(), i + 1),
            message: format!("bad value {:?}", fields[2]),
        })?;
        let (v, dim) = match fields[0] {
            "theta" => (&mut theta, dims.0),
            "alpha" => (&mut alpha, dims.1),
            other => {
                return Err(Error::Format {
                    location: format!("{}:{}", path.display(), i + 1),
                    message: format!("unknown player {other:?}"),
                })
            }
        };
        if index >= dim {
            return Err(Error::Format {
                location: format!("{}:{}", path.display(), i + 1),
                message: format!("index {index} out of range for dim {dim}"),
            });
        }
        v[index] = value;
    }
    Ok((theta, alpha))
}

fn default_start(problem: &MinMaxProblem) -> (Vector, Vector) {
    let (dt, da) = problem.dims();
    let theta0 = match problem.lasso_parts() {
        Some(g) => Vector::from_slice(g.a_hat.data()),
        None => problem.project_theta(&Vector::zeros(dt)),
    };
    (theta0, problem.project_alpha(&Vector::zeros(da)))
}

fn cmd_generate(cli: &Cli) -> minmax_core::Result<()> {
    let cfg = load_config(cli)?;
    let problem = obtain_problem(cli, Some(&cfg))?;
    let dir = out_dir(cli);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("problem.toml");
    problem.save(&path)?;
    let c = problem.constants();
    println!(
        "generated {} problem: dims {:?}, l11={:.4} l22={:.4} l12={:.4} sigma={:.4}, hash {:016x}, wrote {}",
        problem.kind_name(),
        problem.dims(),
        c.l11,
        c.l22,
        c.l12,
        c.sigma,
        problem.hash(),
        path.display()
    );
    Ok(())
}

/// Assemble run parameters for one problem per the solver config: derived
/// from the constants (strongly concave or surrogate route), then field
/// overrides applied on top.
fn build_params(
    problem: &MinMaxProblem,
    sc: &SolverConfig,
    theta0: &Vector,
    alpha0: &Vector,
    verbose: bool,
) -> minmax_core::Result<SolverParams> {
    let c = problem.constants();
    let apply_gaps = |cc: &mut minmax_core::ProblemConstants, est: (f64, f64)| {
        cc.delta_gap = sc.delta_gap.unwrap_or(est.0);
        cc.d_gap = sc.d_gap.unwrap_or(est.1);
    };
    let mut params = if c.sigma > 0.0 {
        let gaps = estimate_gaps(problem, theta0, alpha0, sc.pilot_iters)?;
        let mut cc = c.clone();
        apply_gaps(&mut cc, (gaps.delta_gap, gaps.d_gap));
        derive_params_strongly_concave(&cc, sc.epsilon)?
    } else if sc.strict_theory {
        let lambda = c.l22.min(sc.epsilon / (2.0 * (2.0f64).sqrt() * c.radius));
        let reg = problem.regularized(lambda, alpha0.clone())?;
        let gaps = estimate_gaps(&reg, theta0, alpha0, sc.pilot_iters)?;
        let mut cc = c.clone();
        apply_gaps(&mut cc, (gaps.delta_gap, gaps.d_gap));
        derive_params_concave(&cc, sc.epsilon, alpha0.clone())?
    } else {
        // practical defaults, as used by the benchmark harness
        let spec = ExperimentSpec {
            threshold: sc.epsilon * sc.epsilon,
            budget_iters: sc.budget_iters.unwrap_or(100_000),
            pa: PaSettings { epsilon: sc.epsilon, ..Default::default() },
            ..Default::default()
        };
        let mut p = pa_params_for(problem, &spec);
        p.alpha_hat = Some(alpha0.clone());
        p
    };
    if let Some(v) = sc.eta1 {
        params.eta1 = v;
    }
    if let Some(v) = sc.eta2 {
        params.eta2 = v;
    }
    if let Some(v) = sc.n_restart {
        params.n_restart = v;
    }
    if let Some(v) = sc.k_inner {
        params.k_inner = v;
    }
    if let Some(v) = sc.t_outer {
        params.t_outer = v;
    }
    if let Some(v) = sc.lambda {
        params.lambda = v;
    }
    if let Some(v) = &sc.alpha_hat {
        params.alpha_hat = Some(Vector::from_slice(v));
    }
    if sc.has_step_overrides() {
        if let Err(e) = params.validate_theory(c) {
            if verbose {
                eprintln!("note: overrides leave the analyzed step-size regime ({e})");
            }
        }
    }
    Ok(params)
}

fn cmd_solve(cli: &Cli) -> minmax_core::Result<()> {
    let cfg = if cli.config.is_some() {
        Some(load_config(cli)?)
    } else {
        None
    };
    let problem = obtain_problem(cli, cfg.as_ref())?;
    let sc = cfg.map(|c| c.solver).unwrap_or_default();
    let sc = SolverConfig {
        epsilon: cli.epsilon.unwrap_or(sc.epsilon),
        strict_theory: sc.strict_theory || cli.strict_theory,
        budget_iters: cli.budget_iters.or(sc.budget_iters),
        budget_seconds: cli.budget_seconds.or(sc.budget_seconds),
        ..sc
    };
    let (theta0, alpha0) = match &cli.start {
        Some(path) => read_point_csv(path, problem.dims())?,
        None => default_start(&problem),
    };
    let params = build_params(&problem, &sc, &theta0, &alpha0, cli.verbose)?;
    let stop = StoppingRule {
        target_max_measure: if sc.strict_theory {
            None
        } else {
            Some(sc.epsilon * sc.epsilon)
        },
        max_outer: sc.budget_iters,
        max_seconds: sc.budget_seconds,
        record_iterates: false,
    };
    if cli.verbose {
        eprintln!(
            "running T={} K={} N={} eta1={:.3e} eta2={:.3e} lambda={:.3e}",
            params.t_outer, params.k_inner, params.n_restart, params.eta1, params.eta2, params.lambda
        );
    }
    let trace = solve(&problem, &theta0, &alpha0, &params, &stop)?;
    let dir = out_dir(cli);
    std::fs::create_dir_all(&dir)?;
    let trace_path = dir.join("trace.csv");
    trace.write_csv(&trace_path)?;
    trace.write_meta(&dir.join("trace_meta.json"))?;
    let best = &trace.best;
    let e2 = sc.epsilon * sc.epsilon;
    println!(
        "solve: {} iterations ({}), best t={} stat_x={:.6e} stat_y={:.6e}, eps_fne={} at epsilon {}, trace {}",
        trace.rows.len(),
        trace.meta.stop_reason,
        best.index,
        best.stat_x,
        best.stat_y,
        best.stat_x <= e2 && best.stat_y <= e2,
        sc.epsilon,
        trace_path.display()
    );
    Ok(())
}

fn cmd_measure(cli: &Cli) -> minmax_core::Result<()> {
    let cfg = if cli.config.is_some() {
        Some(load_config(cli)?)
    } else {
        None
    };
    let problem = obtain_problem(cli, cfg.as_ref())?;
    let point = cli
        .point
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("measure needs --point <file>".into()))?;
    let (theta, alpha) = read_point_csv(point, problem.dims())?;
    let epsilon = cli
        .epsilon
        .or(cfg.as_ref().map(|c| c.solver.epsilon))
        .unwrap_or(0.1);
    let report = stationarity::report(&problem, &theta, &alpha, epsilon)?;
    println!(
        "measure: stat_x={:.6} stat_y={:.6} type1_theta={:.6} type1_alpha={:.6} eps_fne={} (epsilon {}, l11={}, l22={})",
        report.stat_x,
        report.stat_y,
        report.type1_theta,
        report.type1_alpha,
        report.epsilon_fne,
        epsilon,
        report.l11_used,
        report.l22_used
    );
    Ok(())
}

fn cmd_experiment(cli: &Cli) -> minmax_core::Result<()> {
    let cfg = load_config(cli)?;
    let spec = cfg
        .experiment
        .ok_or_else(|| Error::InvalidArgument("config has no [experiment] table".into()))?;
    let dir = out_dir(cli);
    let result = run_experiment(&spec, Some(&dir))?;
    for s in &result.summaries {
        println!(
            "experiment {}: success {}/{} mean_time={} std_time={} mean_grad_calls={}",
            s.algorithm.name(),
            s.n_success,
            spec.n_trials,
            s.mean_time.map(|v| format!("{v:.4}s")).unwrap_or_else(|| "-".into()),
            s.std_time.map(|v| format!("{v:.4}s")).unwrap_or_else(|| "-".into()),
            s.mean_grad_calls.map(|v| format!("{v:.0}")).unwrap_or_else(|| "-".into()),
        );
    }
    println!(
        "experiment: results under {}",
        dir.join("results").join(format!("{:016x}", result.spec_hash)).display()
    );
    Ok(())
}

fn cmd_validate(cli: &Cli) -> minmax_core::Result<()> {
    if cli.positional.is_empty() {
        return Err(Error::InvalidArgument("validate needs at least one trace file".into()));
    }
    for p in &cli.positional {
        let rows = validate_trace_csv(Path::new(p))?;
        println!("valid trace: {p} ({rows} rows)");
    }
    Ok(())
}
