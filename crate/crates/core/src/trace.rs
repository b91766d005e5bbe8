//! Per-iteration run records, their CSV serialization, and validation.
//!
//! The CSV schema is stable: one row per outer iteration with columns
//! `t,g_value,stat_x,stat_y,wall_time`. `g_value` is the attained inner
//! objective (problem-native orientation), the stationarity columns are the
//! subproblem measures of the original game, and `wall_time` is cumulative
//! seconds since the run started. Extra per-row data (regularized measure,
//! cumulative gradient calls) lives in memory and in the JSON sidecar, not
//! in the CSV.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hash_f64s, Vector};

pub const TRACE_HEADER: &str = "t,g_value,stat_x,stat_y,wall_time";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    /// Attained inner objective at (theta_t, alpha_{t+1}).
    pub g_value: f64,
    pub stat_x: f64,
    pub stat_y: f64,
    /// Maximizing player's measure of the regularized game, when one ran.
    pub stat_y_reg: Option<f64>,
    pub inner_iters: usize,
    /// Cumulative instrumented gradient-oracle calls at the end of the
    /// iteration.
    pub grad_calls: u64,
    /// Cumulative wall-clock seconds since the run started.
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestIterate {
    pub index: usize,
    pub theta: Vector,
    pub alpha: Vector,
    pub stat_x: f64,
    pub stat_y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub algorithm: String,
    pub problem_kind: String,
    pub problem_hash: u64,
    pub problem_seed: Option<u64>,
    pub start_hash: u64,
    pub epsilon: Option<f64>,
    pub lambda: f64,
    /// Estimated radius the maximizing player moves in, flagged here because
    /// for the attack game it is an estimate rather than a true bound.
    pub radius_used: f64,
    pub params: serde_json::Value,
    pub stop_reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub best: BestIterate,
    pub start_theta: Vector,
    pub start_alpha: Vector,
    pub final_theta: Vector,
    pub final_alpha: Vector,
    /// theta_t per outer iteration, kept only when iterate recording was
    /// requested (figure data needs it).
    pub thetas: Option<Vec<Vector>>,
    /// alpha_{t+1} per outer iteration under the same flag.
    pub alphas: Option<Vec<Vector>>,
    pub meta: RunMeta,
}

impl RunTrace {
    /// Iterate minimizing max(stat_x, stat_y); ties break toward the
    /// earliest iteration.
    pub fn best_row(&self) -> &TraceRow {
        &self.rows[self.best.index]
    }

    pub fn total_grad_calls(&self) -> u64 {
        self.rows.last().map(|r| r.grad_calls).unwrap_or(0)
    }

    /// First iteration index at which both measures are at or below the
    /// threshold, if any.
    pub fn first_hit(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| r.stat_x <= threshold && r.stat_y <= threshold)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.t, r.g_value, r.stat_x, r.stat_y, r.wall_time
            )?;
        }
        Ok(())
    }

    pub fn write_meta(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Format {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Fingerprint of the measure columns and best iterate, timings
    /// excluded; equal fingerprints mean bit-identical runs.
    pub fn determinism_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for r in &self.rows {
            hash_f64s(&mut h, &[r.t as f64, r.g_value, r.stat_x, r.stat_y]);
            if let Some(y) = r.stat_y_reg {
                hash_f64s(&mut h, &[y]);
            }
            hash_f64s(&mut h, &[r.grad_calls as f64]);
        }
        hash_f64s(&mut h, self.best.theta.as_slice());
        hash_f64s(&mut h, self.best.alpha.as_slice());
        hash_f64s(&mut h, self.final_theta.as_slice());
        hash_f64s(&mut h, self.final_alpha.as_slice());
        h
    }
}

/// Strict schema check of a trace CSV: exact header, iteration numbers
/// counting up from zero, and finite values everywhere. Errors carry the
/// offending row (1-based, counting the header as row 1).
pub fn validate_trace_csv(path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == TRACE_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Format {
                location: format!("{}:1", path.display()),
                message: format!("bad header {header:?}, expected {TRACE_HEADER:?}"),
            })
        }
        None => {
            return Err(Error::Format {
                location: path.display().to_string(),
                message: "empty file".into(),
            })
        }
    }
    let mut count = 0usize;
    for (i, line) in lines {
        let rowno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format {
                location: format!("{}:{rowno}", path.display()),
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let t: usize = fields[0].parse().map_err(|_| Error::Format {
            location: format!("{}:{rowno}", path.display()),
            message: format!("bad iteration index {:?}", fields[0]),
        })?;
        if t != count {
            return Err(Error::Format {
                location: format!("{}:{rowno}", path.display()),
                message: format!("iteration index {t} out of order, expected {count}"),
            });
        }
        for (name, raw) in ["g_value", "stat_x", "stat_y", "wall_time"].iter().zip(&fields[1..]) {
            let v: f64 = raw.parse().map_err(|_| Error::Format {
                location: format!("{}:{rowno}", path.display()),
                message: format!("unparsable {name} {raw:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Format {
                    location: format!("{}:{rowno}", path.display()),
                    message: format!("non-finite {name} {raw:?}"),
                });
            }
        }
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> RunTrace {
        let rows = (0..3)
            .map(|t| TraceRow {
                t,
                g_value: 1.5 - t as f64 * 0.25,
                stat_x: 0.1 / (t + 1) as f64,
                stat_y: 0.2 / (t + 1) as f64,
                stat_y_reg: None,
                inner_iters: 4,
                grad_calls: 10 * (t as u64 + 1),
                wall_time: 0.001 * (t + 1) as f64,
            })
            .collect();
        RunTrace {
            rows,
            best: BestIterate {
                index: 2,
                theta: Vector::from_slice(&[0.1]),
                alpha: Vector::from_slice(&[0.2]),
                stat_x: 0.1 / 3.0,
                stat_y: 0.2 / 3.0,
            },
            start_theta: Vector::zeros(1),
            start_alpha: Vector::zeros(1),
            final_theta: Vector::from_slice(&[0.1]),
            final_alpha: Vector::from_slice(&[0.2]),
            thetas: None,
            alphas: None,
            meta: RunMeta {
                algorithm: "pa".into(),
                problem_kind: "quadratic".into(),
                problem_hash: 7,
                problem_seed: Some(1),
                start_hash: 3,
                epsilon: Some(0.1),
                lambda: 0.0,
                radius_used: 1.0,
                params: serde_json::Value::Null,
                stop_reason: "completed".into(),
            },
        }
    }

    #[test]
    fn csv_roundtrip_validates() {
        let dir = std::env::temp_dir().join("minmax_trace_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ok.csv");
        sample_trace().write_csv(&path).unwrap();
        assert_eq!(validate_trace_csv(&path).unwrap(), 3);
    }

    #[test]
    fn corrupted_row_is_pinpointed() {
        let dir = std::env::temp_dir().join("minmax_trace_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        let mut text = String::from(TRACE_HEADER);
        text.push_str("\n0,1.0,0.1,0.2,0.001\n1,NaN,0.1,0.2,0.002\n");
        std::fs::write(&path, text).unwrap();
        let err = validate_trace_csv(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3"), "row not named: {msg}");
        assert!(msg.contains("g_value"), "field not named: {msg}");
    }

    #[test]
    fn first_hit_finds_threshold_crossing() {
        let tr = sample_trace();
        assert_eq!(tr.first_hit(0.15), Some(1));
        assert_eq!(tr.first_hit(0.001), None);
    }

    #[test]
    fn fingerprint_ignores_wall_time() {
        let a = sample_trace();
        let mut b = sample_trace();
        for r in &mut b.rows {
            r.wall_time *= 10.0;
        }
        assert_eq!(a.determinism_fingerprint(), b.determinism_fingerprint());
        b.rows[0].g_value = f64::from_bits(b.rows[0].g_value.to_bits() + 1);
        assert_ne!(a.determinism_fingerprint(), b.determinism_fingerprint());
    }
}
