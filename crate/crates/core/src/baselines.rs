//! Single-step descent-ascent baselines sharing the trace format.
//!
//! SDA alternates one projected subgradient ascent step for the inner
//! player with one projected subgradient descent step for the outer player;
//! PDA does the same with exact prox steps. Per-iteration cost is two
//! gradient calls, against K+1 for the multi-step method, so comparisons in
//! the experiment harness are run on gradient-call counts and wall time.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hash_f64s, Vector};
use crate::problem::MinMaxProblem;
use crate::prox::{rho_alpha, rho_theta};
use crate::solver::StoppingRule;
use crate::stationarity::{measure_x, measure_y};
use crate::trace::{BestIterate, RunMeta, RunTrace, TraceRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSchedule {
    Constant,
    InverseSqrt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub step_theta: f64,
    pub step_alpha: f64,
    pub t_max: usize,
    pub schedule: StepSchedule,
}

impl BaselineParams {
    /// PDA defaults: constant steps at the inverse Lipschitz constants.
    pub fn pda_defaults(problem: &MinMaxProblem, t_max: usize) -> Self {
        let c = problem.constants();
        BaselineParams {
            step_theta: 1.0 / c.l11,
            step_alpha: 1.0 / c.l22,
            t_max,
            schedule: StepSchedule::Constant,
        }
    }

    /// SDA defaults: c / sqrt(t+1) with c the inverse of the larger
    /// Lipschitz constant. The source experiments leave these unspecified;
    /// these are the documented defaults all comparisons use.
    pub fn sda_defaults(problem: &MinMaxProblem, t_max: usize) -> Self {
        let c = problem.constants();
        let base = 1.0 / c.l11.max(c.l22);
        BaselineParams {
            step_theta: base,
            step_alpha: base,
            t_max,
            schedule: StepSchedule::InverseSqrt,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.step_theta) || !ok(self.step_alpha) {
            return Err(Error::InvalidArgument("baseline steps must be positive".into()));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidArgument("t_max must be at least 1".into()));
        }
        Ok(())
    }

    fn factor(&self, t: usize) -> f64 {
        match self.schedule {
            StepSchedule::Constant => 1.0,
            StepSchedule::InverseSqrt => 1.0 / ((t + 1) as f64).sqrt(),
        }
    }
}

enum BaselineKind {
    Sda,
    Pda,
}

/// Subgradient descent-ascent: ascent step on h - p for the inner player,
/// descent step on h + q for the outer player, both projected. The
/// subgradients use the minimal-norm element at kinks.
pub fn run_sda(
    problem: &MinMaxProblem,
    theta0: &Vector,
    alpha0: &Vector,
    params: &BaselineParams,
    stop: &StoppingRule,
) -> Result<RunTrace> {
    run_baseline(problem, theta0, alpha0, params, stop, BaselineKind::Sda)
}

/// Proximal gradient descent-ascent: one exact prox-gradient step per
/// player per iteration, inner first.
pub fn run_pda(
    problem: &MinMaxProblem,
    theta0: &Vector,
    alpha0: &Vector,
    params: &BaselineParams,
    stop: &StoppingRule,
) -> Result<RunTrace> {
    run_baseline(problem, theta0, alpha0, params, stop, BaselineKind::Pda)
}

fn run_baseline(
    problem: &MinMaxProblem,
    theta0: &Vector,
    alpha0: &Vector,
    params: &BaselineParams,
    stop: &StoppingRule,
    kind: BaselineKind,
) -> Result<RunTrace> {
    params.validate()?;
    let theta0 = problem.project_theta(theta0);
    let alpha0 = problem.project_alpha(alpha0);
    let t_cap = params.t_max.min(stop.max_outer.unwrap_or(usize::MAX)).max(1);
    let start = Instant::now();
    let grad_base = problem.counts().gradients();

    let mut theta = theta0.clone();
    let mut alpha = alpha0.clone();
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut thetas: Option<Vec<Vector>> = if stop.record_iterates { Some(Vec::new()) } else { None };
    let mut alphas: Option<Vec<Vector>> = if stop.record_iterates { Some(Vec::new()) } else { None };
    let mut best: Option<BestIterate> = None;
    let mut stop_reason = "completed";

    for t in 0..t_cap {
        let fac = params.factor(t);
        let alpha_next = match kind {
            BaselineKind::Sda => {
                let ascent = problem
                    .grad_h_alpha(&theta, &alpha)?
                    .sub(&problem.p_subgradient(&alpha));
                problem.project_alpha(&alpha.add_scaled(fac * params.step_alpha, &ascent))
            }
            BaselineKind::Pda => {
                rho_alpha(problem, &theta, &alpha, 1.0 / (fac * params.step_alpha))?
            }
        };
        if !alpha_next.is_finite() {
            return Err(Error::NonFinite { context: format!("baseline inner step at iteration {t}") });
        }
        let stat_x = measure_x(problem, &theta, &alpha_next)?;
        let stat_y = measure_y(problem, &theta, &alpha_next)?;
        let attained = problem
            .reported_objective(problem.h_value(&theta, &alpha_next)? - problem.p_value(&alpha_next));
        if let Some(ts) = thetas.as_mut() {
            ts.push(theta.clone());
        }
        if let Some(als) = alphas.as_mut() {
            als.push(alpha_next.clone());
        }
        let score = stat_x.max(stat_y);
        if best.as_ref().is_none_or(|b| score < b.stat_x.max(b.stat_y)) {
            best = Some(BestIterate {
                index: t,
                theta: theta.clone(),
                alpha: alpha_next.clone(),
                stat_x,
                stat_y,
            });
        }
        let theta_next = match kind {
            BaselineKind::Sda => {
                let descent = problem
                    .grad_h_theta(&theta, &alpha_next)?
                    .add_scaled(1.0, &problem.q_subgradient(&theta));
                problem.project_theta(&theta.add_scaled(-fac * params.step_theta, &descent))
            }
            BaselineKind::Pda => {
                rho_theta(problem, &theta, &alpha_next, 1.0 / (fac * params.step_theta))?
            }
        };
        if !theta_next.is_finite() {
            return Err(Error::NonFinite { context: format!("baseline outer step at iteration {t}") });
        }
        rows.push(TraceRow {
            t,
            g_value: attained,
            stat_x,
            stat_y,
            stat_y_reg: None,
            inner_iters: 1,
            grad_calls: problem.counts().gradients() - grad_base,
            wall_time: start.elapsed().as_secs_f64(),
        });
        alpha = alpha_next;
        theta = theta_next;
        if let Some(target) = stop.target_max_measure {
            if score <= target {
                stop_reason = "target reached";
                break;
            }
        }
        if let Some(budget) = stop.max_seconds {
            if start.elapsed().as_secs_f64() > budget {
                stop_reason = "time budget";
                break;
            }
        }
    }
    if stop_reason == "completed" && t_cap < params.t_max {
        stop_reason = "iteration budget";
    }

    let best = best.expect("at least one iteration ran");
    let mut start_hash: u64 = 0xcbf29ce484222325;
    hash_f64s(&mut start_hash, theta0.as_slice());
    hash_f64s(&mut start_hash, alpha0.as_slice());
    Ok(RunTrace {
        rows,
        best,
        start_theta: theta0,
        start_alpha: alpha0,
        final_theta: theta,
        final_alpha: alpha,
        thetas,
        alphas,
        meta: RunMeta {
            algorithm: match kind {
                BaselineKind::Sda => "sda".into(),
                BaselineKind::Pda => "pda".into(),
            },
            problem_kind: problem.kind_name().into(),
            problem_hash: problem.hash(),
            problem_seed: problem.seed(),
            start_hash,
            epsilon: None,
            lambda: 0.0,
            radius_used: problem.constants().radius,
            params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
            stop_reason: stop_reason.into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problem::{quadratic_game_from_parts, QuadraticGame};

    fn bilinear_1d() -> MinMaxProblem {
        // h = theta * alpha on [-1,1]^2, no curvature for either player.
        let g = QuadraticGame {
            q_mat: DenseMatrix::zeros(1, 1),
            c_mat: DenseMatrix::from_vec(1, 1, vec![1.0]),
            s_mat: DenseMatrix::zeros(1, 1),
            b: Vector::zeros(1),
            tau_alpha: 0.0,
            tau_theta: 0.0,
            radius_theta: 1.0,
            radius_alpha: 1.0,
        };
        quadratic_game_from_parts(g, None).unwrap()
    }

    fn saddle_1d() -> MinMaxProblem {
        // h = theta^2/2 + theta*alpha - alpha^2/2: unique equilibrium at 0.
        let g = QuadraticGame {
            q_mat: DenseMatrix::from_vec(1, 1, vec![0.5]),
            c_mat: DenseMatrix::from_vec(1, 1, vec![1.0]),
            s_mat: DenseMatrix::from_vec(1, 1, vec![1.0]),
            b: Vector::zeros(1),
            tau_alpha: 0.0,
            tau_theta: 0.0,
            radius_theta: 1.0,
            radius_alpha: 1.0,
        };
        quadratic_game_from_parts(g, None).unwrap()
    }

    #[test]
    fn pda_never_leaves_exact_equilibrium() {
        let p = saddle_1d();
        let params = BaselineParams::pda_defaults(&p, 50);
        let z = Vector::zeros(1);
        let trace = run_pda(&p, &z, &z, &params, &StoppingRule::exhaustive()).unwrap();
        assert_eq!(trace.final_theta.as_slice(), &[0.0]);
        assert_eq!(trace.final_alpha.as_slice(), &[0.0]);
        assert!(trace.rows[0].stat_x <= 1e-12 && trace.rows[0].stat_y <= 1e-12);
    }

    #[test]
    fn pda_converges_on_strongly_concave_saddle() {
        // Outer step 1/Lg with Lg = l11 + l12^2/sigma = 2; the bare 1/l11
        // step cycles on this game, which is exactly why the multi-step
        // method carries the composite constant.
        let p = saddle_1d();
        let params = BaselineParams {
            step_theta: 0.5,
            step_alpha: 1.0,
            t_max: 1000,
            schedule: StepSchedule::Constant,
        };
        let t0 = Vector::from_slice(&[0.8]);
        let a0 = Vector::from_slice(&[-0.6]);
        let trace = run_pda(&p, &t0, &a0, &params, &StoppingRule::exhaustive()).unwrap();
        let dist = (trace.final_theta.norm().powi(2) + trace.final_alpha.norm().powi(2)).sqrt();
        assert!(dist < 1e-4, "distance to saddle {dist}");
    }

    #[test]
    fn sda_constant_steps_spiral_on_bilinear_game() {
        let p = bilinear_1d();
        let params = BaselineParams {
            step_theta: 0.2,
            step_alpha: 0.2,
            t_max: 1000,
            schedule: StepSchedule::Constant,
        };
        let t0 = Vector::from_slice(&[0.3]);
        let a0 = Vector::from_slice(&[0.2]);
        let trace = run_sda(&p, &t0, &a0, &params, &StoppingRule::exhaustive()).unwrap();
        let dist = (trace.final_theta.norm().powi(2) + trace.final_alpha.norm().powi(2)).sqrt();
        // Classic non-convergence of simultaneousish constant-step updates:
        // the norm does not contract toward the equilibrium.
        assert!(dist > 0.2, "bilinear iterates unexpectedly collapsed: {dist}");
        assert!(trace.rows.iter().all(|r| r.g_value.is_finite()));
    }

    #[test]
    fn sda_matches_plain_gradient_steps_when_smooth() {
        // With p = q = 0 the subgradient reduces to the gradient.
        let p = saddle_1d();
        let params = BaselineParams {
            step_theta: 0.1,
            step_alpha: 0.1,
            t_max: 3,
            schedule: StepSchedule::Constant,
        };
        let t0 = Vector::from_slice(&[0.5]);
        let a0 = Vector::from_slice(&[0.1]);
        let trace = run_sda(&p, &t0, &a0, &params, &StoppingRule::exhaustive()).unwrap();
        // Hand-rolled reference of the same alternating updates.
        let (mut th, mut al) = (0.5f64, 0.1f64);
        for _ in 0..3 {
            al = (al + 0.1 * (th - al)).clamp(-1.0, 1.0);
            th = (th - 0.1 * (th + al)).clamp(-1.0, 1.0);
        }
        assert!((trace.final_theta[0] - th).abs() < 1e-15);
        assert!((trace.final_alpha[0] - al).abs() < 1e-15);
    }

    #[test]
    fn subgradient_run_on_attack_game_improves_inner_measure() {
        let p = crate::problem::make_lasso_attack(8, 24, 2, 1.0, 0.1, 0.01, 77).unwrap();
        let parts = p.lasso_parts().unwrap();
        let t0 = Vector::from_slice(parts.a_hat.data());
        let a0 = Vector::zeros(24);
        let params = BaselineParams::sda_defaults(&p, 2000);
        assert_eq!(params.schedule, StepSchedule::InverseSqrt);
        let trace = run_sda(&p, &t0, &a0, &params, &StoppingRule::exhaustive()).unwrap();
        assert!(trace.rows.iter().all(|r| {
            r.g_value.is_finite() && r.stat_x.is_finite() && r.stat_y.is_finite()
        }));
        let first = trace.rows[0].stat_y;
        let best = trace.rows.iter().map(|r| r.stat_y).fold(f64::INFINITY, f64::min);
        assert!(best < first, "inner measure never improved: {best} vs {first}");
    }

    #[test]
    fn per_iteration_gradient_cost_is_two() {
        let p = saddle_1d();
        p.reset_counts();
        let params = BaselineParams::pda_defaults(&p, 10);
        let z = Vector::from_slice(&[0.4]);
        let trace = run_pda(&p, &z, &z, &params, &StoppingRule::exhaustive()).unwrap();
        // 2 algorithm gradients + 2 measure gradients per iteration.
        assert_eq!(trace.total_grad_calls(), 4 * trace.rows.len() as u64);
    }
}
