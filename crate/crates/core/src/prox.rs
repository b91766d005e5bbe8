//! Closed-form proximal operators and projections, plus the two
//! gradient-step operators used by every solver in the crate.

use crate::error::Result;
use crate::linalg::Vector;
use crate::problem::MinMaxProblem;

/// Componentwise sign(x) * max(|x| - tau, 0).
pub fn soft_threshold(x: &Vector, tau: f64) -> Vector {
    debug_assert!(tau >= 0.0);
    Vector::from_vec(
        x.iter()
            .map(|&v| {
                let m = v.abs() - tau;
                if m > 0.0 {
                    v.signum() * m
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

/// Projection onto { y : ||y - center||^2 <= radius_sq }.
///
/// The bound is on the SQUARED norm, so the Euclidean radius of the ball is
/// sqrt(radius_sq). Misreading the bound as a plain norm bound changes
/// results materially.
pub fn project_ball(x: &Vector, center: &Vector, radius_sq: f64) -> Vector {
    debug_assert!(radius_sq > 0.0);
    let diff = x.sub(center);
    let d2 = diff.dot(&diff);
    if d2 <= radius_sq {
        x.clone()
    } else {
        center.add_scaled(radius_sq.sqrt() / d2.sqrt(), &diff)
    }
}

/// Componentwise clamp onto [lo, hi].
pub fn project_box(x: &Vector, lo: f64, hi: f64) -> Vector {
    Vector::from_vec(x.iter().map(|&v| v.clamp(lo, hi)).collect())
}

/// Exact prox of tau*||.||_1 restricted to the Euclidean ball of radius
/// `radius` centered at the origin: soft-threshold, then scale back onto the
/// ball. The radial scaling is exact because the KKT multiplier for the ball
/// constraint rescales every shrunk coordinate uniformly without changing
/// signs or the active set.
pub fn prox_l1_in_ball(x: &Vector, tau: f64, radius: f64) -> Vector {
    let y = soft_threshold(x, tau);
    let n = y.norm();
    if n <= radius {
        y
    } else {
        y.scale(radius / n)
    }
}

/// Exact prox of tau*||.||_1 restricted to the box [lo, hi]^d
/// (coordinatewise shrink-then-clamp; exact since the problem separates).
pub fn prox_l1_in_box(x: &Vector, tau: f64, lo: f64, hi: f64) -> Vector {
    project_box(&soft_threshold(x, tau), lo, hi)
}

/// Ascent operator for the concave player: the unique maximizer of
/// <grad_alpha h(theta, alpha), a - alpha> - gamma1/2 ||a - alpha||^2 - p(a)
/// over the alpha feasible set, realized as one fused prox call.
/// `gamma1` is the quadratic weight; the implied step is 1/gamma1.
pub fn rho_alpha(
    problem: &MinMaxProblem,
    theta: &Vector,
    alpha: &Vector,
    gamma1: f64,
) -> Result<Vector> {
    debug_assert!(gamma1 > 0.0);
    let grad = problem.grad_h_alpha(theta, alpha)?;
    let step = 1.0 / gamma1;
    Ok(problem.prox_p(&alpha.add_scaled(step, &grad), step))
}

/// Descent operator for the minimizing player: the unique minimizer of
/// <grad_theta h(theta, alpha), t - theta> + gamma2/2 ||t - theta||^2 + q(t)
/// over the theta feasible set.
pub fn rho_theta(
    problem: &MinMaxProblem,
    theta: &Vector,
    alpha: &Vector,
    gamma2: f64,
) -> Result<Vector> {
    debug_assert!(gamma2 > 0.0);
    let grad = problem.grad_h_theta(theta, alpha)?;
    let step = 1.0 / gamma2;
    Ok(problem.prox_q(&theta.add_scaled(-step, &grad), step))
}
