//! End-to-end checks of the binary: generate/solve/validate round trips for
//! every bundled config, the exit-code contract, the half-space measure
//! example, and total reachability of config fields via --set.

use std::path::{Path, PathBuf};
use std::process::Command;

use minmax_cli::config::{parse_config, ConfigFile, ProblemConfig, SolverConfig};
use minmax_core::experiments::ExperimentSpec;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minmax"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("minmax_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bundled_configs_roundtrip_generate_solve_validate() {
    for name in [
        "quadratic_small.toml",
        "lasso_desk.toml",
        "scalar_halfspace.toml",
        "experiment_desk.toml",
    ] {
        let out = temp_dir(&format!("rt_{}", name.replace('.', "_")));
        let cfg = repo_config(name);
        let status = bin()
            .args(["generate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "{name}: generate failed");
        let problem_file = out.join("problem.toml");
        assert!(problem_file.is_file(), "{name}: problem file missing");

        let status = bin()
            .args(["solve", "--problem"])
            .arg(&problem_file)
            .arg("--out")
            .arg(&out)
            .args(["--budget-iters", "5000"])
            .status()
            .unwrap();
        assert!(status.success(), "{name}: solve failed");

        let status = bin()
            .arg("validate")
            .arg(out.join("trace.csv"))
            .status()
            .unwrap();
        assert!(status.success(), "{name}: validate failed");
        let _ = std::fs::remove_dir_all(&out);
    }
}

#[test]
fn solve_from_equilibrium_start_reports_verdict_true() {
    // The half-space instance's default start is its exact optimum.
    let out = temp_dir("fne");
    let output = bin()
        .args(["solve", "--config"])
        .arg(repo_config("scalar_halfspace.toml"))
        .arg("--out")
        .arg(&out)
        .args(["--epsilon", "0.1"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("eps_fne=true"), "stdout: {stdout}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn measure_reports_the_halfspace_value() {
    let out = temp_dir("measure");
    let point = out.join("point.csv");
    std::fs::write(&point, "player,index,value\ntheta,0,1.1\nalpha,0,0.0\n").unwrap();
    let output = bin()
        .args(["measure", "--config"])
        .arg(repo_config("scalar_halfspace.toml"))
        .arg("--point")
        .arg(&point)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("stat_x=0.210000"),
        "expected the 0.21 value measure, got: {stdout}"
    );
    assert!(stdout.contains("type1_theta=0.100000"), "stdout: {stdout}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn corrupted_trace_fails_validation_with_row_diagnostic() {
    let out = temp_dir("corrupt");
    let trace = out.join("trace.csv");
    std::fs::write(
        &trace,
        "t,g_value,stat_x,stat_y,wall_time\n0,1.0,0.5,0.5,0.001\n1,1.1,0.4,0.4,0.002\n2,NaN,0.3,0.3,0.003\n",
    )
    .unwrap();
    let output = bin().arg("validate").arg(&trace).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":4"), "row not pinpointed: {stderr}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn unknown_flags_and_unknown_keys_exit_one() {
    let output = bin().args(["solve", "--frobnicate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("usage"));

    let output = bin()
        .args(["solve", "--config"])
        .arg(repo_config("quadratic_small.toml"))
        .args(["--set", "solver.no_such_knob=3"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn numerical_blowup_exits_two() {
    // an absurd inner step overflows the unconstrained inner iterates; the
    // run must stop with the non-finite diagnostic and the
    // numerical-failure exit code
    let out = temp_dir("blowup");
    let output = bin()
        .args(["solve", "--config"])
        .arg(repo_config("lasso_desk.toml"))
        .args(["--set", "solver.eta1=1e308"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    let _ = std::fs::remove_dir_all(&out);
    assert_eq!(output.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("non-finite"), "stderr: {stderr}");
}

#[test]
fn experiment_subcommand_writes_results() {
    let out = temp_dir("exp");
    let output = bin()
        .args(["experiment", "--config"])
        .arg(repo_config("experiment_desk.toml"))
        .arg("--out")
        .arg(&out)
        .args(["--trials", "2"])
        .args(["--set", "experiment.m=8", "--set", "experiment.n=24", "--set", "experiment.sparsity=2"])
        .args(["--algorithms", "pa,pda"])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("experiment pa:"), "stdout: {stdout}");
    let results = out.join("results");
    assert!(results.is_dir());
    // one spec-hash directory with summary and per-trial traces
    let hash_dir = std::fs::read_dir(&results).unwrap().next().unwrap().unwrap().path();
    assert!(hash_dir.join("summary.csv").is_file());
    assert!(hash_dir.join("trial-0").join("pa_trace.csv").is_file());
    let _ = std::fs::remove_dir_all(&out);
}

// ---------------------------------------------------------------------------
// override coverage: every solver and experiment field is reachable
// ---------------------------------------------------------------------------

fn fully_populated_config() -> ConfigFile {
    ConfigFile {
        version: 1,
        problem: Some(ProblemConfig::Quadratic {
            d_theta: 2,
            d_alpha: 2,
            seed: 7,
            sigma: 1.0,
        }),
        solver: SolverConfig {
            epsilon: 0.1,
            strict_theory: false,
            budget_iters: Some(1000),
            budget_seconds: Some(10.0),
            pilot_iters: 8,
            eta1: Some(0.5),
            eta2: Some(0.25),
            n_restart: Some(4),
            k_inner: Some(8),
            t_outer: Some(100),
            lambda: Some(0.05),
            alpha_hat: Some(vec![0.1, -0.2]),
            delta_gap: Some(2.0),
            d_gap: Some(3.0),
        },
        experiment: Some(ExperimentSpec::default()),
    }
}

fn leaf_paths(prefix: &str, value: &toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                leaf_paths(&path, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn crafted_override(v: &toml::Value) -> (String, toml::Value) {
    match v {
        toml::Value::Integer(n) => ((n + 1).to_string(), toml::Value::Integer(n + 1)),
        toml::Value::Float(f) => {
            let nf = f + 1.0;
            (nf.to_string(), toml::Value::Float(nf))
        }
        toml::Value::Boolean(b) => ((!b).to_string(), toml::Value::Boolean(!b)),
        toml::Value::String(s) => (format!("{s:?}"), v.clone()),
        toml::Value::Array(_) => {
            let mut text = String::new();
            let _ = write_toml_inline(v, &mut text);
            (text, v.clone())
        }
        other => (other.to_string(), other.clone()),
    }
}

fn write_toml_inline(v: &toml::Value, out: &mut String) -> std::fmt::Result {
    use std::fmt::Write;
    match v {
        toml::Value::Array(items) => {
            write!(out, "[")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    write!(out, ", ")?;
                }
                write_toml_inline(item, out)?;
            }
            write!(out, "]")
        }
        toml::Value::String(s) => write!(out, "{s:?}"),
        toml::Value::Integer(n) => write!(out, "{n}"),
        toml::Value::Float(f) => write!(out, "{f}"),
        toml::Value::Boolean(b) => write!(out, "{b}"),
        other => write!(out, "{other}"),
    }
}

#[test]
fn every_solver_and_experiment_field_is_overridable() {
    let base = fully_populated_config();
    let text = toml::to_string(&base).unwrap();
    let doc: toml::Value = toml::from_str(&text).unwrap();
    let mut leaves = Vec::new();
    leaf_paths("", &doc, &mut leaves);
    let mut covered = 0;
    for (path, value) in &leaves {
        if !(path.starts_with("solver.") || path.starts_with("experiment.")) {
            continue;
        }
        let (raw, expect) = crafted_override(value);
        let cfg = parse_config(&text, &[(path.clone(), raw.clone())])
            .unwrap_or_else(|e| panic!("override {path}={raw} rejected: {e}"));
        let round: toml::Value = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        let mut node = &round;
        for part in path.split('.') {
            node = node
                .get(part)
                .unwrap_or_else(|| panic!("override {path} vanished after round trip"));
        }
        assert_eq!(node, &expect, "override {path} did not take");
        covered += 1;
    }
    // every SolverConfig field plus every ExperimentSpec field (including
    // the nested practical settings) must have been exercised
    assert!(covered >= 14 + 16, "only {covered} leaf fields covered");
}
