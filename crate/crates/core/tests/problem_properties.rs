//! Certification that generated instances actually satisfy the smoothness
//! assumptions their stored constants claim: all four gradient-Lipschitz
//! inequalities sampled over random feasible pairs, exactly for quadratic
//! games and with 1% slack for the attack game (whose constants come from
//! operator-norm bounds).

mod common;

use minmax_core::linalg::Vector;
use minmax_core::problem::{make_lasso_attack, make_quadratic_game, MinMaxProblem};
use minmax_core::rng::{normal_vector, rng_from_seed, uniform_in_ball, SeededRng};

struct PairSampler<'a> {
    problem: &'a MinMaxProblem,
    rng: SeededRng,
    theta_scale: f64,
    alpha_scale: f64,
}

impl<'a> PairSampler<'a> {
    fn theta(&mut self) -> Vector {
        let (dt, _) = self.problem.dims();
        let v = normal_vector(&mut self.rng, dt, self.theta_scale);
        self.problem.project_theta(&v)
    }

    fn alpha(&mut self) -> Vector {
        let (_, da) = self.problem.dims();
        match self.problem.lasso_parts() {
            // unconstrained player: sample inside the working radius
            Some(_) => uniform_in_ball(&mut self.rng, da, self.problem.constants().radius),
            None => self
                .problem
                .project_alpha(&normal_vector(&mut self.rng, da, self.alpha_scale)),
        }
    }
}

fn certify_assumption_constants(problem: &MinMaxProblem, seed: u64, slack: f64, pairs: usize) {
    let c = problem.constants();
    let mut s = PairSampler {
        problem,
        rng: rng_from_seed(seed),
        theta_scale: 1.0,
        alpha_scale: 1.0,
    };
    // For the attack game theta lives in a thin ball around the center, so
    // sample displacements near it rather than around the origin.
    if let Some(g) = problem.lasso_parts() {
        s.theta_scale = g.delta.sqrt();
    }
    for _ in 0..pairs {
        let theta = s.theta();
        let theta2 = s.theta();
        let alpha = s.alpha();
        let alpha2 = s.alpha();
        let dt = theta.dist(&theta2);
        let da = alpha.dist(&alpha2);

        if dt > 1e-12 {
            // grad_theta h Lipschitz in theta with l11
            let g1 = problem.grad_h_theta(&theta, &alpha).unwrap();
            let g2 = problem.grad_h_theta(&theta2, &alpha).unwrap();
            assert!(
                g1.dist(&g2) <= c.l11 * dt * (1.0 + slack),
                "l11 violated: {} > {}",
                g1.dist(&g2) / dt,
                c.l11
            );
            // grad_alpha h Lipschitz in theta with l12
            let g1 = problem.grad_h_alpha(&theta, &alpha).unwrap();
            let g2 = problem.grad_h_alpha(&theta2, &alpha).unwrap();
            assert!(
                g1.dist(&g2) <= c.l12 * dt * (1.0 + slack),
                "l12 (alpha-grad in theta) violated: {} > {}",
                g1.dist(&g2) / dt,
                c.l12
            );
        }
        if da > 1e-12 {
            // grad_alpha h Lipschitz in alpha with l22
            let g1 = problem.grad_h_alpha(&theta, &alpha).unwrap();
            let g2 = problem.grad_h_alpha(&theta, &alpha2).unwrap();
            assert!(
                g1.dist(&g2) <= c.l22 * da * (1.0 + slack),
                "l22 violated: {} > {}",
                g1.dist(&g2) / da,
                c.l22
            );
            // grad_theta h Lipschitz in alpha with l12
            let g1 = problem.grad_h_theta(&theta, &alpha).unwrap();
            let g2 = problem.grad_h_theta(&theta, &alpha2).unwrap();
            assert!(
                g1.dist(&g2) <= c.l12 * da * (1.0 + slack),
                "l12 (theta-grad in alpha) violated: {} > {}",
                g1.dist(&g2) / da,
                c.l12
            );
        }
    }
}

#[test]
fn quadratic_constants_certify_exactly() {
    // power iteration resolves the operator norms to ~1e-13, so the
    // inequalities hold to within that
    let p = make_quadratic_game((4, 3), 901, 0.5).unwrap();
    certify_assumption_constants(&p, 902, 1e-9, 1000);
}

#[test]
fn attack_constants_certify_with_one_percent_slack() {
    let p = make_lasso_attack(12, 50, 4, 1.0, 0.1, 0.02, 903).unwrap();
    certify_assumption_constants(&p, 904, 0.01, 1000);
}

#[test]
fn full_scale_attack_instance_constructs() {
    // the reference scale: a 100x500 design with 25-sparse ground truth
    // and noise variance 0.001
    let noise_std = 0.001f64.sqrt();
    let p = make_lasso_attack(100, 500, 25, 1.0, 0.1, noise_std, 7).unwrap();
    assert_eq!(p.dims(), (100 * 500, 500));
    let parts = p.lasso_parts().unwrap();
    let nonzeros = parts.x_star.iter().filter(|&&v| v != 0.0).count();
    assert_eq!(nonzeros, 25);
    assert_eq!(parts.noise.dim(), 100);
    let c = p.constants();
    assert!(c.l22 > 0.0 && c.sigma == 0.0 && c.radius > 0.0);
}

#[test]
fn strong_concavity_holds_along_alpha() {
    // <grad f(a1) - grad f(a2), a1 - a2> <= -sigma ||a1 - a2||^2 for the
    // concave inner function
    let p = make_quadratic_game((3, 4), 905, 0.7).unwrap();
    let sigma = p.constants().sigma;
    let mut rng = rng_from_seed(906);
    for _ in 0..500 {
        let theta = uniform_in_ball(&mut rng, 3, 1.0);
        let a1 = uniform_in_ball(&mut rng, 4, 1.0);
        let a2 = uniform_in_ball(&mut rng, 4, 1.0);
        let g1 = p.grad_h_alpha(&theta, &a1).unwrap();
        let g2 = p.grad_h_alpha(&theta, &a2).unwrap();
        let lhs = g1.sub(&g2).dot(&a1.sub(&a2));
        let d2 = a1.dist(&a2).powi(2);
        assert!(lhs <= -sigma * d2 + 1e-10);
    }
}
