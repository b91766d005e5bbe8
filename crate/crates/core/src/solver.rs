//! Multi-step accelerated proximal gradient descent-ascent.
//!
//! Each outer iteration runs K accelerated proximal-ascent steps on the
//! inner (concave) player, organized as K/N momentum blocks of N steps with
//! the momentum coefficient reset at every block boundary, then takes one
//! prox-gradient step for the outer (minimizing) player using the inner
//! output as an inexact maximizer. For merely-concave inner problems the
//! game is first made strongly concave by subtracting
//! lambda/2 ||alpha - alpha_hat||^2, and the reported stationarity always
//! refers to the original game.
//!
//! Restart anchoring: each momentum block warm-starts from the previous
//! block's last iterate (the first block from the caller's alpha). The
//! first extrapolation coefficient of a block is zero, so re-anchoring the
//! difference term to a stale iterate cannot leak across blocks.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hash_f64s, Vector};
use crate::problem::{MinMaxProblem, ProblemConstants};
use crate::prox::{rho_alpha, rho_theta};
use crate::stationarity::{measure_x, measure_y};
use crate::trace::{BestIterate, RunMeta, RunTrace, TraceRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Inner step size; the ascent operator runs with quadratic weight 1/eta1.
    pub eta1: f64,
    /// Outer step size; the descent operator runs with quadratic weight 1/eta2.
    pub eta2: f64,
    /// Momentum block length N.
    pub n_restart: usize,
    /// Total inner steps K per outer iteration; a multiple of N.
    pub k_inner: usize,
    /// Outer iteration count T.
    pub t_outer: usize,
    /// Strong-concavity surrogate weight; 0 runs the game as given.
    pub lambda: f64,
    /// Target accuracy the parameters were derived for.
    pub epsilon: f64,
    /// Center of the surrogate quadratic; defaults to the start point.
    pub alpha_hat: Option<Vector>,
}

impl SolverParams {
    /// Structural checks every run needs.
    pub fn validate_basic(&self) -> Result<()> {
        if !self.eta1.is_finite() || self.eta1 <= 0.0 {
            return Err(Error::InvalidArgument(format!("eta1 must be positive, got {}", self.eta1)));
        }
        if !self.eta2.is_finite() || self.eta2 <= 0.0 {
            return Err(Error::InvalidArgument(format!("eta2 must be positive, got {}", self.eta2)));
        }
        if self.n_restart == 0 || self.t_outer == 0 {
            return Err(Error::InvalidArgument("n_restart and t_outer must be at least 1".into()));
        }
        if self.k_inner < self.n_restart || !self.k_inner.is_multiple_of(self.n_restart) {
            return Err(Error::InvalidArgument(format!(
                "k_inner ({}) must be a positive multiple of n_restart ({})",
                self.k_inner, self.n_restart
            )));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::InvalidArgument("lambda must be nonnegative".into()));
        }
        Ok(())
    }

    /// Full check against the step-size bounds the convergence analysis
    /// assumes. Derived parameters always satisfy this; hand-tuned step
    /// overrides may not, and runs with such overrides record that fact
    /// rather than failing here.
    pub fn validate_theory(&self, constants: &ProblemConstants) -> Result<()> {
        self.validate_basic()?;
        let slack = 1.0 + 1e-12;
        if self.eta1 * (constants.l22 + self.lambda) > slack {
            return Err(Error::InvalidArgument(format!(
                "eta1 ({}) exceeds 1 / (l22 + lambda)",
                self.eta1
            )));
        }
        let curvature = constants.sigma.max(self.lambda);
        let lg = if constants.l12 == 0.0 {
            constants.l11
        } else if curvature > 0.0 {
            constants.l11 + constants.l12 * constants.l12 / curvature
        } else {
            return Err(Error::InvalidArgument(
                "theory step sizes need strong concavity or a positive lambda".into(),
            ));
        };
        if self.eta2 * lg > slack {
            return Err(Error::InvalidArgument(format!(
                "eta2 ({}) exceeds 1 / (l11 + l12^2 / max(sigma, lambda))",
                self.eta2
            )));
        }
        Ok(())
    }
}

/// Early-exit policy layered on top of the derived iteration counts. With
/// everything unset the solver runs its full budget ("strict" mode).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    /// Stop once max(stat_x, stat_y) of the original game is at or below
    /// this value (callers targeting an eps-FNE pass eps^2).
    pub target_max_measure: Option<f64>,
    /// Hard cap on outer iterations, below the derived T.
    pub max_outer: Option<usize>,
    /// Wall-clock budget in seconds. A binding time budget makes reruns
    /// non-reproducible; the iteration cap is the deterministic control.
    pub max_seconds: Option<f64>,
    /// Keep theta_t per iteration in the trace (needed for figure data).
    pub record_iterates: bool,
}

impl StoppingRule {
    pub fn exhaustive() -> Self {
        StoppingRule::default()
    }
}

pub(crate) fn beta_next(beta: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * beta * beta).sqrt())
}

// ---------------------------------------------------------------------------
// parameter derivations
// ---------------------------------------------------------------------------

fn restart_length(l_inner: f64, curvature: f64) -> usize {
    let n = (8.0 * l_inner / curvature).sqrt() - 1.0;
    (n.ceil().max(1.0)) as usize
}

fn round_up_to_multiple(value: f64, base: usize) -> usize {
    let b = base as f64;
    let blocks = (value / b).ceil().max(1.0);
    (blocks as usize).saturating_mul(base)
}

/// Iteration counts and step sizes for sigma-strongly-concave games:
/// eta1 = 1/L22, eta2 = 1/(L11 + L12^2/sigma), N = ceil(sqrt(8 L22/sigma) - 1),
/// K from the log-accuracy bound, T from the 4 Lg D / eps^2 bound.
pub fn derive_params_strongly_concave(
    constants: &ProblemConstants,
    epsilon: f64,
) -> Result<SolverParams> {
    if constants.sigma.is_nan() || constants.sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "strongly concave derivation needs sigma > 0, got {}",
            constants.sigma
        )));
    }
    if epsilon.is_nan() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be in (0,1), got {epsilon}")));
    }
    constants.validate()?;
    let l11 = constants.l11;
    let l22 = constants.l22;
    let l12 = constants.l12;
    let sigma = constants.sigma;
    let r = constants.radius;
    let lg = l11 + l12 * l12 / sigma;
    let kappa = l22 / sigma;
    let n_restart = restart_length(l22, sigma);
    let c = (2.0 * (2.0f64).ln() + (lg * l12 * r).ln()).max(
        l22.ln() + (2.0 * l22 * r + constants.grad_alpha_bound + constants.lp + r).ln(),
    );
    let n_k = 2.0
        * (8.0 * kappa).sqrt()
        * (c + 2.0 * (1.0 / epsilon).ln() + 0.5 * (2.0 * constants.delta_gap / sigma).ln());
    let k_inner = round_up_to_multiple(if n_k.is_finite() { n_k } else { 0.0 }, n_restart);
    let t_outer = ((4.0 * lg * constants.d_gap / (epsilon * epsilon)).ceil() as usize).max(1);
    Ok(SolverParams {
        eta1: 1.0 / l22,
        eta2: 1.0 / lg,
        n_restart,
        k_inner,
        t_outer,
        lambda: 0.0,
        epsilon,
        alpha_hat: None,
    })
}

/// Iteration counts and step sizes for merely-concave games via the
/// quadratic surrogate: lambda = min(L22, eps/(2 sqrt(2) R)),
/// eta1 = 1/(L22+lambda), eta2 = 1/(L11 + L12^2/lambda),
/// N = ceil(sqrt(8 (L22+lambda)/lambda) - 1), K from the log bound with the
/// shifted constants, T from the 8 Lg_lambda D / eps^2 bound.
pub fn derive_params_concave(
    constants: &ProblemConstants,
    epsilon: f64,
    alpha_hat: Vector,
) -> Result<SolverParams> {
    if epsilon.is_nan() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be in (0,1), got {epsilon}")));
    }
    constants.validate()?;
    let l11 = constants.l11;
    let l22 = constants.l22;
    let l12 = constants.l12;
    let r = constants.radius;
    let lambda = l22.min(epsilon / (2.0 * (2.0f64).sqrt() * r));
    let lg = l11 + l12 * l12 / lambda;
    let kappa = (l22 + lambda) / lambda;
    let n_restart = restart_length(l22 + lambda, lambda);
    let g_max_reg = constants.grad_alpha_bound + lambda * r;
    let c = (2.0 * (2.0f64).ln() + (lg * l12 * r).ln()).max(
        (l22 + lambda).ln() + (2.0 * (l22 + lambda) * r + g_max_reg + constants.lp + r).ln(),
    );
    let n_k = 2.0
        * (8.0 * kappa).sqrt()
        * (c + 2.0 * (2.0 / epsilon).ln() + 0.5 * (2.0 * constants.delta_gap / lambda).ln());
    let k_inner = round_up_to_multiple(if n_k.is_finite() { n_k } else { 0.0 }, n_restart);
    let t_outer = ((8.0 * lg * constants.d_gap / (epsilon * epsilon)).ceil() as usize).max(1);
    Ok(SolverParams {
        eta1: 1.0 / (l22 + lambda),
        eta2: 1.0 / lg,
        n_restart,
        k_inner,
        t_outer,
        lambda,
        epsilon,
        alpha_hat: Some(alpha_hat),
    })
}

// ---------------------------------------------------------------------------
// inner ascent
// ---------------------------------------------------------------------------

fn inner_blocks(
    problem: &MinMaxProblem,
    theta: &Vector,
    alpha_start: &Vector,
    eta1: f64,
    n_restart: usize,
    k_inner: usize,
) -> Result<Vector> {
    let gamma = 1.0 / eta1;
    let blocks = k_inner / n_restart;
    let mut anchor = alpha_start.clone();
    for block in 0..blocks {
        let mut beta = 1.0;
        let mut x_prev = anchor.clone();
        let mut y = anchor.clone();
        let mut x = anchor.clone();
        for j in 1..=n_restart {
            x = rho_alpha(problem, theta, &y, gamma)?;
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("inner ascent block {block} step {j}"),
                });
            }
            let beta_new = beta_next(beta);
            y = x.add_scaled((beta - 1.0) / beta_new, &x.sub(&x_prev));
            beta = beta_new;
            x_prev = x.clone();
        }
        anchor = x;
    }
    Ok(anchor)
}

/// K accelerated proximal-ascent steps on the inner player at fixed theta,
/// in K/N restart blocks of N momentum steps. When params.lambda > 0 the
/// surrogate term is included in the ascent gradient.
pub fn inner_accelerated_ascent(
    problem: &MinMaxProblem,
    theta: &Vector,
    alpha_start: &Vector,
    params: &SolverParams,
) -> Result<Vector> {
    params.validate_basic()?;
    if params.lambda > 0.0 {
        let hat = params
            .alpha_hat
            .clone()
            .unwrap_or_else(|| alpha_start.clone());
        let reg = problem.regularized(params.lambda, hat)?;
        inner_blocks(&reg, theta, alpha_start, params.eta1, params.n_restart, params.k_inner)
    } else {
        inner_blocks(problem, theta, alpha_start, params.eta1, params.n_restart, params.k_inner)
    }
}

// ---------------------------------------------------------------------------
// outer loop
// ---------------------------------------------------------------------------

/// Run the full descent-ascent loop. For t = 0..T-1: the inner ascent
/// produces alpha_{t+1} from alpha_t at theta_t, the stationarity measures
/// of the ORIGINAL game are recorded at (theta_t, alpha_{t+1}), then the
/// outer prox-gradient step produces theta_{t+1}. When params.lambda > 0
/// all updates run on the surrogate game (built here once) while the trace
/// still reports the original game's measures; the surrogate's own inner
/// measure is kept alongside. The reported candidate is the iterate
/// minimizing max(stat_x, stat_y).
pub fn solve(
    problem: &MinMaxProblem,
    theta0: &Vector,
    alpha0: &Vector,
    params: &SolverParams,
    stop: &StoppingRule,
) -> Result<RunTrace> {
    params.validate_basic()?;
    let (dt, da) = problem.dims();
    if theta0.dim() != dt {
        return Err(Error::DimensionMismatch { context: "theta0", expected: dt, actual: theta0.dim() });
    }
    if alpha0.dim() != da {
        return Err(Error::DimensionMismatch { context: "alpha0", expected: da, actual: alpha0.dim() });
    }
    let theta0 = problem.project_theta(theta0);
    let alpha0 = problem.project_alpha(alpha0);

    let surrogate;
    let run_problem: &MinMaxProblem = if params.lambda > 0.0 {
        let hat = params.alpha_hat.clone().unwrap_or_else(|| alpha0.clone());
        surrogate = problem.regularized(params.lambda, hat)?;
        &surrogate
    } else {
        problem
    };

    let t_cap = params.t_outer.min(stop.max_outer.unwrap_or(usize::MAX)).max(1);
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
        let alpha_next = inner_blocks(
            run_problem,
            &theta,
            &alpha,
            params.eta1,
            params.n_restart,
            params.k_inner,
        )?;
        let stat_x = measure_x(problem, &theta, &alpha_next)?;
        let stat_y = measure_y(problem, &theta, &alpha_next)?;
        let stat_y_reg = if params.lambda > 0.0 {
            Some(measure_y(run_problem, &theta, &alpha_next)?)
        } else {
            None
        };
        let attained =
            problem.reported_objective(problem.h_value(&theta, &alpha_next)? - problem.p_value(&alpha_next));
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

        let theta_next = rho_theta(run_problem, &theta, &alpha_next, 1.0 / params.eta2)?;
        if !theta_next.is_finite() {
            return Err(Error::NonFinite { context: format!("outer step at iteration {t}") });
        }
        rows.push(TraceRow {
            t,
            g_value: attained,
            stat_x,
            stat_y,
            stat_y_reg,
            inner_iters: params.k_inner,
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
    if stop_reason == "completed" && t_cap < params.t_outer {
        stop_reason = "iteration budget";
    }

    let best = best.expect("at least one outer iteration ran");
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
            algorithm: "pa".into(),
            problem_kind: problem.kind_name().into(),
            problem_hash: problem.hash(),
            problem_seed: problem.seed(),
            start_hash,
            epsilon: Some(params.epsilon),
            lambda: params.lambda,
            radius_used: problem.constants().radius,
            params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
            stop_reason: stop_reason.into(),
        },
    })
}

/// Concave-case front end: center the surrogate at the start point, refresh
/// the gap bounds on the surrogate game, derive the full parameter set for
/// the requested accuracy, and run. Measures in the returned trace refer to
/// the original game; the surrogate's inner measure rides along per row.
pub fn solve_concave(
    problem: &MinMaxProblem,
    theta0: &Vector,
    alpha0: &Vector,
    epsilon: f64,
    stop: &StoppingRule,
) -> Result<RunTrace> {
    let alpha0 = problem.project_alpha(alpha0);
    let theta0 = problem.project_theta(theta0);
    let c = problem.constants();
    let lambda = c.l22.min(epsilon / (2.0 * (2.0f64).sqrt() * c.radius));
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(
            "surrogate weight came out zero; l22 and radius must be positive".into(),
        ));
    }
    let reg = problem.regularized(lambda, alpha0.clone())?;
    let gaps = estimate_gaps(&reg, &theta0, &alpha0, 8)?;
    let mut constants = c.clone();
    constants.delta_gap = gaps.delta_gap;
    constants.d_gap = gaps.d_gap;
    let params = derive_params_concave(&constants, epsilon, alpha0.clone())?;
    solve(problem, &theta0, &alpha0, &params, stop)
}

// ---------------------------------------------------------------------------
// high-accuracy inner solves, value-function access, gap estimation
// ---------------------------------------------------------------------------

/// Accelerated proximal ascent at fixed theta until the inner
/// prox-displacement residual (scaled by l22) is at or below tol.
/// Strongly concave problems restart on the analysis schedule; otherwise a
/// momentum-alignment restart is used.
pub fn inner_solve_to_tol(
    problem: &MinMaxProblem,
    theta: &Vector,
    alpha_start: &Vector,
    tol: f64,
    max_iters: usize,
) -> Result<Vector> {
    let c = problem.constants();
    let l22 = c.l22;
    let gamma = l22;
    let fixed_restart = if c.sigma > 0.0 {
        Some(((8.0 * l22 / c.sigma).sqrt().ceil() as usize).max(1))
    } else {
        None
    };
    let mut x = problem.project_alpha(alpha_start);
    let mut y = x.clone();
    let mut beta = 1.0;
    let mut since_restart = 0usize;
    let mut residual = f64::INFINITY;
    for it in 0..max_iters {
        let x_new = rho_alpha(problem, theta, &y, gamma)?;
        if !x_new.is_finite() {
            return Err(Error::NonFinite { context: "inner_solve_to_tol".into() });
        }
        since_restart += 1;
        let restart = match fixed_restart {
            Some(n) => since_restart >= n,
            // Momentum-alignment test: restart when the extrapolated point
            // moved against the actual progress direction.
            None => y.sub(&x_new).dot(&x_new.sub(&x)) > 0.0,
        };
        if restart {
            beta = 1.0;
            y = x_new.clone();
            since_restart = 0;
        } else {
            let beta_new = beta_next(beta);
            y = x_new.add_scaled((beta - 1.0) / beta_new, &x_new.sub(&x));
            beta = beta_new;
        }
        x = x_new;
        // The residual check costs one extra gradient; amortize it.
        if it % 8 == 7 || it + 1 == max_iters {
            let probe = rho_alpha(problem, theta, &x, gamma)?;
            residual = l22 * probe.dist(&x);
            if residual <= tol {
                return Ok(x);
            }
        }
    }
    Err(Error::NoConvergence { context: "inner_solve_to_tol".into(), residual })
}

/// Value of the inner maximization g(theta) = max over alpha of h - p,
/// computed to the requested prox-residual tolerance, together with the
/// maximizer.
pub fn g_value_high_accuracy(
    problem: &MinMaxProblem,
    theta: &Vector,
    alpha_hint: &Vector,
    tol: f64,
    max_iters: usize,
) -> Result<(f64, Vector)> {
    let alpha_star = inner_solve_to_tol(problem, theta, alpha_hint, tol, max_iters)?;
    let g = problem.h_value(theta, &alpha_star)? - problem.p_value(&alpha_star);
    Ok((g, alpha_star))
}

/// Gradient of the inner max-value function at theta, via its (unique under
/// strong concavity) maximizer: grad_theta h(theta, alpha*(theta)).
pub fn grad_g(
    problem: &MinMaxProblem,
    theta: &Vector,
    alpha_hint: &Vector,
    tol: f64,
    max_iters: usize,
) -> Result<(Vector, Vector)> {
    let alpha_star = inner_solve_to_tol(problem, theta, alpha_hint, tol, max_iters)?;
    let grad = problem.grad_h_theta(theta, &alpha_star)?;
    Ok((grad, alpha_star))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapEstimates {
    /// Bound on the inner suboptimality at the start point.
    pub delta_gap: f64,
    /// Bound on the outer objective decrease available from the start.
    pub d_gap: f64,
}

/// Estimate the two gap bounds on the game as given (pass the surrogate
/// game when one will be used): one high-accuracy inner solve at theta0
/// for the inner gap, and the observed range of g + q over a short pilot
/// descent for the outer gap. Both are doubled and floored so the derived
/// budgets stay positive.
pub fn estimate_gaps(
    problem: &MinMaxProblem,
    theta0: &Vector,
    alpha0: &Vector,
    pilot_iters: usize,
) -> Result<GapEstimates> {
    let c = problem.constants();
    let scale_tol = 1e-9 * (1.0 + c.grad_alpha_bound);
    let cap = 200_000;
    let (g0, alpha_star) = g_value_high_accuracy(problem, theta0, alpha0, scale_tol, cap)?;
    let attained = problem.h_value(theta0, alpha0)? - problem.p_value(alpha0);
    let floor = 1e-9 * (1.0 + g0.abs());
    let delta_gap = (2.0 * (g0 - attained).max(0.0)).max(floor);

    let curvature = if c.sigma > 0.0 { c.sigma } else { c.l22 };
    let lg = c.l11 + if c.l12 > 0.0 { c.l12 * c.l12 / curvature } else { 0.0 };
    let mut theta = theta0.clone();
    let mut alpha = alpha_star;
    let mut lo = g0 + problem.q_value(&theta);
    let mut hi = lo;
    for _ in 0..pilot_iters {
        theta = rho_theta(problem, &theta, &alpha, lg)?;
        let (g, a) = g_value_high_accuracy(problem, &theta, &alpha, scale_tol, cap)?;
        alpha = a;
        let v = g + problem.q_value(&theta);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let d_gap = (2.0 * (hi - lo)).max(floor);
    Ok(GapEstimates { delta_gap, d_gap })
}
