//! Stationarity measures for approximate first-order Nash equilibria.
//!
//! The primary pair of measures evaluates, for each player, the optimal
//! value of a regularized linearized subproblem around the query point;
//! both are zero exactly at a first-order Nash equilibrium, and a point is
//! an eps-FNE when both are at most eps^2. The subproblems are strongly
//! convex (resp. concave) with a single prox-friendly term, so they are
//! solved in one exact prox call rather than iteratively — the reported
//! numbers are deterministic.
//!
//! The weaker prox-displacement residual (per player, scaled by the
//! player's Lipschitz constant) is also exposed; the subproblem-value
//! notion is strictly stronger.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::MinMaxProblem;

/// Values in [-NEG_CLIP, 0] are rounding noise and clip to zero; anything
/// more negative indicates a wrong prox or a wrong Lipschitz constant.
const NEG_CLIP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub stat_x: f64,
    pub stat_y: f64,
    pub type1_theta: f64,
    pub type1_alpha: f64,
    pub epsilon: f64,
    pub epsilon_fne: bool,
    /// Which Lipschitz constants the measures were computed with, for
    /// disambiguation when a regularized wrapper changed them.
    pub l11_used: f64,
    pub l22_used: f64,
}

fn clip(value: f64) -> Result<f64> {
    if value < -NEG_CLIP {
        Err(Error::NegativeMeasure { value })
    } else {
        Ok(value.max(0.0))
    }
}

/// Minimizing player's measure: -2 L11 times the optimal value of
///   min over feasible t of  <grad_theta h, t - theta> + q(t) - q(theta)
///                           + L11/2 ||t - theta||^2.
/// The minimizer is one prox step of q from the gradient point.
pub fn measure_x(problem: &MinMaxProblem, theta_bar: &Vector, alpha_bar: &Vector) -> Result<f64> {
    let l11 = problem.constants().l11;
    let grad = problem.grad_h_theta(theta_bar, alpha_bar)?;
    let step = 1.0 / l11;
    let trial = problem.prox_q(&theta_bar.add_scaled(-step, &grad), step);
    let diff = trial.sub(theta_bar);
    let value = grad.dot(&diff) + problem.q_value(&trial) - problem.q_value(theta_bar)
        + 0.5 * l11 * diff.dot(&diff);
    clip(-2.0 * l11 * value)
}

/// Maximizing player's measure: 2 L22 times the optimal value of
///   max over feasible a of  <grad_alpha h, a - alpha> - p(a) + p(alpha)
///                           - L22/2 ||a - alpha||^2.
pub fn measure_y(problem: &MinMaxProblem, theta_bar: &Vector, alpha_bar: &Vector) -> Result<f64> {
    let l22 = problem.constants().l22;
    let grad = problem.grad_h_alpha(theta_bar, alpha_bar)?;
    let step = 1.0 / l22;
    let trial = problem.prox_p(&alpha_bar.add_scaled(step, &grad), step);
    let diff = trial.sub(alpha_bar);
    let value = grad.dot(&diff) - problem.p_value(&trial) + problem.p_value(alpha_bar)
        - 0.5 * l22 * diff.dot(&diff);
    clip(2.0 * l22 * value)
}

/// Prox-displacement residuals, scaled so that in the smooth unconstrained
/// case each residual equals the player's gradient norm: for each player,
/// L * || prox step from the query point - query point ||, using the same
/// prox points as the subproblem measures.
pub fn measure_type1(
    problem: &MinMaxProblem,
    theta_bar: &Vector,
    alpha_bar: &Vector,
) -> Result<(f64, f64)> {
    let l11 = problem.constants().l11;
    let l22 = problem.constants().l22;
    let grad_t = problem.grad_h_theta(theta_bar, alpha_bar)?;
    let trial_t = problem.prox_q(&theta_bar.add_scaled(-1.0 / l11, &grad_t), 1.0 / l11);
    let grad_a = problem.grad_h_alpha(theta_bar, alpha_bar)?;
    let trial_a = problem.prox_p(&alpha_bar.add_scaled(1.0 / l22, &grad_a), 1.0 / l22);
    Ok((l11 * trial_t.dist(theta_bar), l22 * trial_a.dist(alpha_bar)))
}

/// Full report with the eps-FNE verdict: true iff both subproblem measures
/// are at most epsilon^2.
pub fn report(
    problem: &MinMaxProblem,
    theta_bar: &Vector,
    alpha_bar: &Vector,
    epsilon: f64,
) -> Result<StationarityReport> {
    let stat_x = measure_x(problem, theta_bar, alpha_bar)?;
    let stat_y = measure_y(problem, theta_bar, alpha_bar)?;
    let (type1_theta, type1_alpha) = measure_type1(problem, theta_bar, alpha_bar)?;
    let e2 = epsilon * epsilon;
    Ok(StationarityReport {
        stat_x,
        stat_y,
        type1_theta,
        type1_alpha,
        epsilon,
        epsilon_fne: stat_x <= e2 && stat_y <= e2,
        l11_used: problem.constants().l11,
        l22_used: problem.constants().l22,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problem::{make_scalar_halfspace, quadratic_game_from_parts, QuadraticGame};

    /// minimize z^2/2 over z >= 1, probed at 1 + eps: the displacement
    /// residual is eps while the subproblem measure is 2 eps + eps^2.
    #[test]
    fn halfspace_gap_between_notions() {
        let p = make_scalar_halfspace(1.0).unwrap();
        let alpha = Vector::zeros(1);
        for eps in [0.01, 0.1, 0.5] {
            let z = Vector::from_slice(&[1.0 + eps]);
            let d = measure_x(&p, &z, &alpha).unwrap();
            assert!(
                (d - (2.0 * eps + eps * eps)).abs() < 1e-12,
                "eps={eps}: measure {d}"
            );
            let (t1, _) = measure_type1(&p, &z, &alpha).unwrap();
            assert!((t1 - eps).abs() < 1e-12, "eps={eps}: residual {t1}");
        }
    }

    #[test]
    fn kink_absorbs_gradient() {
        // h = -a^2/2 + a, p = |a|, query at 0 with unit constant: the trial
        // point soft-thresholds back to 0 and the measure vanishes.
        let g = QuadraticGame {
            q_mat: DenseMatrix::from_vec(1, 1, vec![0.5]),
            c_mat: DenseMatrix::from_vec(1, 1, vec![0.0]),
            s_mat: DenseMatrix::from_vec(1, 1, vec![1.0]),
            b: Vector::from_slice(&[1.0]),
            tau_alpha: 1.0,
            tau_theta: 0.0,
            radius_theta: 1.0,
            radius_alpha: 1.0,
        };
        let p = quadratic_game_from_parts(g, None).unwrap();
        let y = measure_y(&p, &Vector::zeros(1), &Vector::zeros(1)).unwrap();
        assert_eq!(y, 0.0);
    }

    #[test]
    fn zero_gradient_at_p_minimizer_gives_zero() {
        let g = QuadraticGame {
            q_mat: DenseMatrix::from_vec(1, 1, vec![0.5]),
            c_mat: DenseMatrix::from_vec(1, 1, vec![0.0]),
            s_mat: DenseMatrix::from_vec(1, 1, vec![1.0]),
            b: Vector::zeros(1),
            tau_alpha: 0.3,
            tau_theta: 0.0,
            radius_theta: 1.0,
            radius_alpha: 1.0,
        };
        let p = quadratic_game_from_parts(g, None).unwrap();
        // grad_alpha h(0, 0) = 0 and 0 minimizes p: both trial values vanish.
        let y = measure_y(&p, &Vector::zeros(1), &Vector::zeros(1)).unwrap();
        assert_eq!(y, 0.0);
    }

    #[test]
    fn smooth_unconstrained_residual_is_gradient_norm() {
        // Large balls so nothing projects; tau = 0 so prox is the identity.
        let g = QuadraticGame {
            q_mat: DenseMatrix::from_vec(2, 2, vec![0.4, 0.1, 0.1, 0.3]),
            c_mat: DenseMatrix::zeros(2, 2),
            s_mat: DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
            b: Vector::from_slice(&[0.2, -0.1]),
            tau_alpha: 0.0,
            tau_theta: 0.0,
            radius_theta: 1e9,
            radius_alpha: 1e9,
        };
        let p = quadratic_game_from_parts(g, None).unwrap();
        let theta = Vector::from_slice(&[0.3, -0.7]);
        let alpha = Vector::from_slice(&[0.2, 0.5]);
        let (t1_theta, t1_alpha) = measure_type1(&p, &theta, &alpha).unwrap();
        let gt = p.grad_h_theta(&theta, &alpha).unwrap();
        let ga = p.grad_h_alpha(&theta, &alpha).unwrap();
        assert!((t1_theta - gt.norm()).abs() < 1e-12);
        assert!((t1_alpha - ga.norm()).abs() < 1e-12);
    }

    #[test]
    fn clipping_band_is_narrow() {
        assert_eq!(clip(-1e-12).unwrap(), 0.0);
        assert_eq!(clip(0.5).unwrap(), 0.5);
        // anything more negative than the band means a broken prox or a
        // wrong constant and must surface as an error
        assert!(clip(-1e-9).is_err());
    }

    #[test]
    fn verdict_respects_squared_epsilon() {
        let p = make_scalar_halfspace(1.0).unwrap();
        let alpha = Vector::zeros(1);
        let z = Vector::from_slice(&[1.1]);
        // measure is 0.21; eps = 0.5 gives eps^2 = 0.25 >= 0.21.
        let r = report(&p, &z, &alpha, 0.5).unwrap();
        assert!(r.epsilon_fne);
        let r = report(&p, &z, &alpha, 0.4).unwrap();
        assert!(!r.epsilon_fne);
    }
}
