//! Config file schema and key=value overrides.
//!
//! One versioned TOML file drives everything: a `[problem]` table describes
//! the instance, `[solver]` the run parameters, `[experiment]` a benchmark
//! sweep. Unknown keys are hard errors so a typo cannot silently change an
//! experiment. Overrides are dotted paths applied to the parsed document
//! before deserialization, so every field of every table is reachable.

use minmax_core::experiments::ExperimentSpec;
use minmax_core::problem::{make_lasso_attack, make_quadratic_game, make_scalar_halfspace};
use minmax_core::{Error, MinMaxProblem, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    Quadratic {
        d_theta: usize,
        d_alpha: usize,
        seed: u64,
        sigma: f64,
    },
    LassoAttack {
        m: usize,
        n: usize,
        sparsity: usize,
        xi: f64,
        delta: f64,
        noise_std: f64,
        seed: u64,
    },
    ScalarHalfspace {
        lower: f64,
    },
}

impl ProblemConfig {
    pub fn build(&self) -> Result<MinMaxProblem> {
        match *self {
            ProblemConfig::Quadratic { d_theta, d_alpha, seed, sigma } => {
                make_quadratic_game((d_theta, d_alpha), seed, sigma)
            }
            ProblemConfig::LassoAttack { m, n, sparsity, xi, delta, noise_std, seed } => {
                make_lasso_attack(m, n, sparsity, xi, delta, noise_std, seed)
            }
            ProblemConfig::ScalarHalfspace { lower } => make_scalar_halfspace(lower),
        }
    }

    pub fn set_seed(&mut self, new_seed: u64) {
        match self {
            ProblemConfig::Quadratic { seed, .. } => *seed = new_seed,
            ProblemConfig::LassoAttack { seed, .. } => *seed = new_seed,
            ProblemConfig::ScalarHalfspace { .. } => {}
        }
    }
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_pilot() -> usize {
    8
}

/// Run parameters. Fields left unset are derived from the problem's
/// constants; explicit values override the derivation (and may leave the
/// regime the convergence analysis covers, which the run notes).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// Use the full derived iteration counts with no early exit.
    pub strict_theory: bool,
    pub budget_iters: Option<usize>,
    pub budget_seconds: Option<f64>,
    /// Pilot iterations for the gap estimation.
    pub pilot_iters: usize,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub n_restart: Option<usize>,
    pub k_inner: Option<usize>,
    pub t_outer: Option<usize>,
    pub lambda: Option<f64>,
    pub alpha_hat: Option<Vec<f64>>,
    /// Override the estimated inner-gap bound used by the derivations.
    pub delta_gap: Option<f64>,
    /// Override the estimated outer-gap bound used by the derivations.
    pub d_gap: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: default_epsilon(),
            strict_theory: false,
            budget_iters: None,
            budget_seconds: None,
            pilot_iters: default_pilot(),
            eta1: None,
            eta2: None,
            n_restart: None,
            k_inner: None,
            t_outer: None,
            lambda: None,
            alpha_hat: None,
            delta_gap: None,
            d_gap: None,
        }
    }
}

impl SolverConfig {
    pub fn has_step_overrides(&self) -> bool {
        self.eta1.is_some()
            || self.eta2.is_some()
            || self.n_restart.is_some()
            || self.k_inner.is_some()
            || self.t_outer.is_some()
            || self.lambda.is_some()
    }
}

/// Parse a config from text, after applying `key=value` overrides onto the
/// TOML document. Values parse as TOML fragments (numbers, booleans,
/// arrays) and fall back to strings.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<ConfigFile> {
    let mut doc: toml::Value = toml::from_str(text).map_err(|e| Error::Format {
        location: "config".into(),
        message: e.to_string(),
    })?;
    for (path, raw) in overrides {
        apply_override(&mut doc, path, raw)?;
    }
    let cfg: ConfigFile = doc.try_into().map_err(|e| Error::Format {
        location: "config".into(),
        message: e.to_string(),
    })?;
    if cfg.version != CONFIG_VERSION {
        return Err(Error::Format {
            location: "config".into(),
            message: format!("unsupported config version {}", cfg.version),
        });
    }
    Ok(cfg)
}

pub fn parse_override_value(raw: &str) -> toml::Value {
    let attempt = format!("x = {raw}");
    if let Ok(table) = toml::from_str::<toml::Table>(&attempt) {
        if let Some(v) = table.get("x") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

pub fn apply_override(doc: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidArgument(format!("bad override path {path:?}")));
    }
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::InvalidArgument(format!("override path {path:?} crosses a non-table"))
        })?;
        node = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()));
    }
    let table = node.as_table_mut().ok_or_else(|| {
        Error::InvalidArgument(format!("override path {path:?} crosses a non-table"))
    })?;
    table.insert(parts[parts.len() - 1].to_string(), parse_override_value(raw));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
version = 1

[problem]
kind = "quadratic"
d_theta = 2
d_alpha = 2
seed = 7
sigma = 1.0
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = parse_config(SAMPLE, &[]).unwrap();
        let p = cfg.problem.unwrap().build().unwrap();
        assert_eq!(p.dims(), (2, 2));
        assert_eq!(cfg.solver.epsilon, 0.1);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = format!("{SAMPLE}\n[solver]\nbogus = 3\n");
        assert!(parse_config(&bad, &[]).is_err());
        let over = [("solver.not_a_field".to_string(), "1".to_string())];
        assert!(parse_config(SAMPLE, &over).is_err());
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let over = [
            ("solver.epsilon".to_string(), "0.25".to_string()),
            ("problem.seed".to_string(), "99".to_string()),
            ("solver.alpha_hat".to_string(), "[0.1, -0.2]".to_string()),
        ];
        let cfg = parse_config(SAMPLE, &over).unwrap();
        assert_eq!(cfg.solver.epsilon, 0.25);
        assert_eq!(cfg.solver.alpha_hat, Some(vec![0.1, -0.2]));
        match cfg.problem.unwrap() {
            ProblemConfig::Quadratic { seed, .. } => assert_eq!(seed, 99),
            _ => panic!("kind changed unexpectedly"),
        }
    }

    #[test]
    fn version_is_checked() {
        let bad = SAMPLE.replace("version = 1", "version = 9");
        assert!(parse_config(&bad, &[]).is_err());
    }
}
