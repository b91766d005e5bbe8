//! The composite min-max game abstraction and its concrete instances.
//!
//! A game is min over theta of max over alpha of
//!     f(theta, alpha) = h(theta, alpha) - p(alpha) + q(theta),
//! with h smooth, p and q convex and possibly non-smooth, and each player
//! constrained to a convex set. Sets and non-smooth terms are fused into a
//! single exact prox per player, because alternating a prox with a
//! projection is not exact in general.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, fnv1a, hash_f64s, min_eigenvalue_psd, DenseMatrix, Vector};
use crate::prox::{project_ball, project_box, prox_l1_in_ball, soft_threshold};
use crate::rng::{distinct_indices, normal_vector, rng_from_seed};

/// Fallback Lipschitz bound used when a player's own curvature is exactly
/// zero (purely bilinear coupling). Any nonnegative constant is a valid
/// upper bound in that case; a unit bound keeps step sizes and the
/// stationarity measures well defined.
const ZERO_CURVATURE_LIPSCHITZ: f64 = 1.0;

/// Smoothness / curvature constants of a hosted game, plus the two gap
/// bounds the iteration-count formulas need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Lipschitz constant of grad_theta h in theta.
    pub l11: f64,
    /// Lipschitz constant of grad_alpha h in alpha.
    pub l22: f64,
    /// Cross-Lipschitz constant (either mixed direction).
    pub l12: f64,
    /// Strong-concavity modulus in alpha; 0 means merely concave.
    pub sigma: f64,
    /// Radius of a Euclidean ball containing the feasible sets.
    pub radius: f64,
    /// Lipschitz constant of p.
    pub lp: f64,
    /// Upper bound on max over feasible alpha of ||grad_alpha h||.
    pub grad_alpha_bound: f64,
    /// Upper bound on the initial inner suboptimality.
    pub delta_gap: f64,
    /// Upper bound on g(theta0) + q(theta0) - min (g + q).
    pub d_gap: f64,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("l11", self.l11),
            ("l22", self.l22),
            ("radius", self.radius),
            ("delta_gap", self.delta_gap),
            ("d_gap", self.d_gap),
        ];
        for (name, v) in pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("l12", self.l12), ("sigma", self.sigma), ("lp", self.lp), ("grad_alpha_bound", self.grad_alpha_bound)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.sigma > 0.0 && self.sigma > self.l22 * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "sigma ({}) exceeds l22 ({})",
                self.sigma, self.l22
            )));
        }
        Ok(())
    }
}

/// Instrumentation shared by a problem and everything derived from it
/// (clones, the regularized wrapper). Relaxed atomics: counts are exact as
/// long as runs that should be accounted separately do not interleave,
/// which the experiment harness guarantees by running algorithms
/// sequentially within a trial.
#[derive(Debug, Default)]
pub struct OracleCounters {
    grad_theta: AtomicU64,
    grad_alpha: AtomicU64,
    h_evals: AtomicU64,
    prox_p: AtomicU64,
    prox_q: AtomicU64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounts {
    pub grad_theta: u64,
    pub grad_alpha: u64,
    pub h_evals: u64,
    pub prox_p: u64,
    pub prox_q: u64,
}

impl OracleCounts {
    /// Total gradient-oracle calls, the cost unit used in comparisons.
    pub fn gradients(&self) -> u64 {
        self.grad_theta + self.grad_alpha
    }
}

impl OracleCounters {
    fn snapshot(&self) -> OracleCounts {
        OracleCounts {
            grad_theta: self.grad_theta.load(Ordering::Relaxed),
            grad_alpha: self.grad_alpha.load(Ordering::Relaxed),
            h_evals: self.h_evals.load(Ordering::Relaxed),
            prox_p: self.prox_p.load(Ordering::Relaxed),
            prox_q: self.prox_q.load(Ordering::Relaxed),
        }
    }

    fn reset(&self) {
        self.grad_theta.store(0, Ordering::Relaxed);
        self.grad_alpha.store(0, Ordering::Relaxed);
        self.h_evals.store(0, Ordering::Relaxed);
        self.prox_p.store(0, Ordering::Relaxed);
        self.prox_q.store(0, Ordering::Relaxed);
    }
}

/// h(theta, alpha) = theta'Q theta + theta'C alpha - alpha'S alpha / 2 + b'alpha,
/// p = tau_alpha ||alpha||_1, q = tau_theta ||theta||_1, both players on
/// origin-centered Euclidean balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticGame {
    pub q_mat: DenseMatrix,
    pub c_mat: DenseMatrix,
    pub s_mat: DenseMatrix,
    pub b: Vector,
    pub tau_alpha: f64,
    pub tau_theta: f64,
    pub radius_theta: f64,
    pub radius_alpha: f64,
}

/// The regression attack game in framework form. The design matrix A is the
/// minimizing player (stored flattened row-major), the regression weights x
/// the maximizing player, and the objective is negated so the attack's
/// max-min becomes min-max:
///     h(A, x) = -||Ax - b||^2,  p(x) = xi ||x||_1,
///     q = indicator of the Frobenius ball { ||A - A_hat||_F^2 <= delta }.
/// The x player is unconstrained; the stored radius is an estimate from a
/// ridge solve, recorded so reports can flag it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoAttack {
    pub m: usize,
    pub n: usize,
    pub a_hat: DenseMatrix,
    pub b: Vector,
    pub xi: f64,
    pub delta: f64,
    /// Ground-truth sparse weights used to generate b (kept for tests).
    pub x_star: Vector,
    /// Additive observation noise used to generate b.
    pub noise: Vector,
    /// Estimated radius of the region the x player moves in.
    pub x_radius: f64,
}

/// One-dimensional half-space instance: minimize theta^2 / 2 subject to
/// theta >= lower, with an inert maximizing player on [-1, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarHalfSpace {
    pub lower: f64,
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    Quadratic(QuadraticGame),
    LassoAttack(LassoAttack),
    ScalarHalfSpace(ScalarHalfSpace),
    /// h replaced by h - lambda/2 ||alpha - alpha_hat||^2; everything else
    /// delegates to the base game.
    Regularized {
        base: Box<ProblemKind>,
        lambda: f64,
        alpha_hat: Vector,
    },
}

/// Oracle bundle for one game instance. Immutable after construction and
/// safe to share across threads; the only interior mutability is the call
/// instrumentation.
#[derive(Clone, Debug)]
pub struct MinMaxProblem {
    kind: ProblemKind,
    constants: ProblemConstants,
    d_theta: usize,
    d_alpha: usize,
    seed: Option<u64>,
    hash: u64,
    counters: Arc<OracleCounters>,
}

// ---------------------------------------------------------------------------
// kind-level oracle evaluation (no instrumentation, no finiteness checks)
// ---------------------------------------------------------------------------

fn flat_matvec(theta: &Vector, m: usize, n: usize, x: &Vector) -> Vector {
    debug_assert_eq!(theta.dim(), m * n);
    debug_assert_eq!(x.dim(), n);
    let t = theta.as_slice();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let row = &t[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x.as_slice()) {
            acc += a * b;
        }
        out[i] = acc;
    }
    Vector::from_vec(out)
}

fn flat_matvec_t(theta: &Vector, m: usize, n: usize, r: &Vector) -> Vector {
    debug_assert_eq!(theta.dim(), m * n);
    debug_assert_eq!(r.dim(), m);
    let t = theta.as_slice();
    let mut out = vec![0.0; n];
    for i in 0..m {
        let ri = r[i];
        if ri == 0.0 {
            continue;
        }
        let row = &t[i * n..(i + 1) * n];
        for (o, a) in out.iter_mut().zip(row) {
            *o += ri * a;
        }
    }
    Vector::from_vec(out)
}

impl ProblemKind {
    fn h_value(&self, theta: &Vector, alpha: &Vector) -> f64 {
        match self {
            ProblemKind::Quadratic(g) => {
                let qt = g.q_mat.matvec(theta);
                let ca = g.c_mat.matvec(alpha);
                let sa = g.s_mat.matvec(alpha);
                theta.dot(&qt) + theta.dot(&ca) - 0.5 * alpha.dot(&sa) + g.b.dot(alpha)
            }
            ProblemKind::LassoAttack(g) => {
                let r = flat_matvec(theta, g.m, g.n, alpha).sub(&g.b);
                -r.dot(&r)
            }
            ProblemKind::ScalarHalfSpace(_) => 0.5 * theta[0] * theta[0],
            ProblemKind::Regularized { base, lambda, alpha_hat } => {
                let d = alpha.sub(alpha_hat);
                base.h_value(theta, alpha) - 0.5 * lambda * d.dot(&d)
            }
        }
    }

    fn grad_theta(&self, theta: &Vector, alpha: &Vector) -> Vector {
        match self {
            ProblemKind::Quadratic(g) => {
                g.q_mat.matvec(theta).scale(2.0).add_scaled(1.0, &g.c_mat.matvec(alpha))
            }
            ProblemKind::LassoAttack(g) => {
                let r = flat_matvec(theta, g.m, g.n, alpha).sub(&g.b);
                let mut out = vec![0.0; g.m * g.n];
                for i in 0..g.m {
                    let c = -2.0 * r[i];
                    for j in 0..g.n {
                        out[i * g.n + j] = c * alpha[j];
                    }
                }
                Vector::from_vec(out)
            }
            ProblemKind::ScalarHalfSpace(_) => Vector::from_slice(&[theta[0]]),
            ProblemKind::Regularized { base, .. } => base.grad_theta(theta, alpha),
        }
    }

    fn grad_alpha(&self, theta: &Vector, alpha: &Vector) -> Vector {
        match self {
            ProblemKind::Quadratic(g) => g
                .c_mat
                .matvec_t(theta)
                .add_scaled(-1.0, &g.s_mat.matvec(alpha))
                .add_scaled(1.0, &g.b),
            ProblemKind::LassoAttack(g) => {
                let r = flat_matvec(theta, g.m, g.n, alpha).sub(&g.b);
                flat_matvec_t(theta, g.m, g.n, &r).scale(-2.0)
            }
            ProblemKind::ScalarHalfSpace(_) => Vector::zeros(1),
            ProblemKind::Regularized { base, lambda, alpha_hat } => base
                .grad_alpha(theta, alpha)
                .add_scaled(-lambda, &alpha.sub(alpha_hat)),
        }
    }

    fn p_value(&self, alpha: &Vector) -> f64 {
        match self {
            ProblemKind::Quadratic(g) => g.tau_alpha * alpha.norm1(),
            ProblemKind::LassoAttack(g) => g.xi * alpha.norm1(),
            ProblemKind::ScalarHalfSpace(_) => 0.0,
            ProblemKind::Regularized { base, .. } => base.p_value(alpha),
        }
    }

    fn q_value(&self, theta: &Vector) -> f64 {
        match self {
            ProblemKind::Quadratic(g) => g.tau_theta * theta.norm1(),
            // Indicator terms contribute zero on the feasible set.
            ProblemKind::LassoAttack(_) | ProblemKind::ScalarHalfSpace(_) => 0.0,
            ProblemKind::Regularized { base, .. } => base.q_value(theta),
        }
    }

    fn prox_p(&self, point: &Vector, step: f64) -> Vector {
        match self {
            ProblemKind::Quadratic(g) => {
                prox_l1_in_ball(point, step * g.tau_alpha, g.radius_alpha)
            }
            ProblemKind::LassoAttack(g) => soft_threshold(point, step * g.xi),
            ProblemKind::ScalarHalfSpace(_) => project_box(point, -1.0, 1.0),
            ProblemKind::Regularized { base, .. } => base.prox_p(point, step),
        }
    }

    fn prox_q(&self, point: &Vector, step: f64) -> Vector {
        match self {
            ProblemKind::Quadratic(g) => {
                prox_l1_in_ball(point, step * g.tau_theta, g.radius_theta)
            }
            ProblemKind::LassoAttack(g) => project_ball_flat(point, g.a_hat.data(), g.delta),
            ProblemKind::ScalarHalfSpace(g) => {
                Vector::from_slice(&[point[0].max(g.lower)])
            }
            ProblemKind::Regularized { base, .. } => base.prox_q(point, step),
        }
    }

    fn project_theta(&self, x: &Vector) -> Vector {
        match self {
            ProblemKind::Quadratic(g) => {
                project_ball(x, &Vector::zeros(x.dim()), g.radius_theta * g.radius_theta)
            }
            ProblemKind::LassoAttack(g) => project_ball_flat(x, g.a_hat.data(), g.delta),
            ProblemKind::ScalarHalfSpace(g) => Vector::from_slice(&[x[0].max(g.lower)]),
            ProblemKind::Regularized { base, .. } => base.project_theta(x),
        }
    }

    fn project_alpha(&self, x: &Vector) -> Vector {
        match self {
            ProblemKind::Quadratic(g) => {
                project_ball(x, &Vector::zeros(x.dim()), g.radius_alpha * g.radius_alpha)
            }
            ProblemKind::LassoAttack(_) => x.clone(),
            ProblemKind::ScalarHalfSpace(_) => project_box(x, -1.0, 1.0),
            ProblemKind::Regularized { base, .. } => base.project_alpha(x),
        }
    }

    fn p_subgradient(&self, alpha: &Vector) -> Vector {
        // Minimal-norm element: the sign vector, zero at kinks.
        match self {
            ProblemKind::Quadratic(g) => sign_vector(alpha).scale(g.tau_alpha),
            ProblemKind::LassoAttack(g) => sign_vector(alpha).scale(g.xi),
            ProblemKind::ScalarHalfSpace(_) => Vector::zeros(alpha.dim()),
            ProblemKind::Regularized { base, .. } => base.p_subgradient(alpha),
        }
    }

    fn q_subgradient(&self, theta: &Vector) -> Vector {
        match self {
            ProblemKind::Quadratic(g) => sign_vector(theta).scale(g.tau_theta),
            ProblemKind::LassoAttack(_) | ProblemKind::ScalarHalfSpace(_) => {
                Vector::zeros(theta.dim())
            }
            ProblemKind::Regularized { base, .. } => base.q_subgradient(theta),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ProblemKind::Quadratic(_) => "quadratic",
            ProblemKind::LassoAttack(_) => "lasso-attack",
            ProblemKind::ScalarHalfSpace(_) => "scalar-halfspace",
            ProblemKind::Regularized { .. } => "regularized",
        }
    }
}

fn sign_vector(x: &Vector) -> Vector {
    Vector::from_vec(
        x.iter()
            .map(|&v| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

/// Ball projection against a center stored as a flat slice (the attack
/// game's design matrix lives row-major in its matrix storage).
fn project_ball_flat(x: &Vector, center: &[f64], radius_sq: f64) -> Vector {
    debug_assert_eq!(x.dim(), center.len());
    let mut d2 = 0.0;
    for (a, c) in x.iter().zip(center) {
        let d = a - c;
        d2 += d * d;
    }
    if d2 <= radius_sq {
        return x.clone();
    }
    let scale = radius_sq.sqrt() / d2.sqrt();
    Vector::from_vec(
        x.iter()
            .zip(center)
            .map(|(a, c)| c + scale * (a - c))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// MinMaxProblem: instrumented public oracle surface
// ---------------------------------------------------------------------------

impl MinMaxProblem {
    pub fn dims(&self) -> (usize, usize) {
        (self.d_theta, self.d_alpha)
    }

    pub fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn kind_name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn counts(&self) -> OracleCounts {
        self.counters.snapshot()
    }

    pub fn reset_counts(&self) {
        self.counters.reset();
    }

    /// Replace the stored constants (e.g. with externally certified bounds
    /// or refined gap estimates). Validates basic consistency.
    pub fn set_constants(&mut self, constants: ProblemConstants) -> Result<()> {
        constants.validate()?;
        self.constants = constants;
        self.hash = self.compute_hash();
        Ok(())
    }

    pub fn grad_h_theta(&self, theta: &Vector, alpha: &Vector) -> Result<Vector> {
        self.check_dims(theta, alpha)?;
        self.counters.grad_theta.fetch_add(1, Ordering::Relaxed);
        let g = self.kind.grad_theta(theta, alpha);
        if !g.is_finite() {
            return Err(Error::NonFinite { context: "grad_h_theta".into() });
        }
        Ok(g)
    }

    pub fn grad_h_alpha(&self, theta: &Vector, alpha: &Vector) -> Result<Vector> {
        self.check_dims(theta, alpha)?;
        self.counters.grad_alpha.fetch_add(1, Ordering::Relaxed);
        let g = self.kind.grad_alpha(theta, alpha);
        if !g.is_finite() {
            return Err(Error::NonFinite { context: "grad_h_alpha".into() });
        }
        Ok(g)
    }

    pub fn h_value(&self, theta: &Vector, alpha: &Vector) -> Result<f64> {
        self.check_dims(theta, alpha)?;
        self.counters.h_evals.fetch_add(1, Ordering::Relaxed);
        let v = self.kind.h_value(theta, alpha);
        if !v.is_finite() {
            return Err(Error::NonFinite { context: "h_value".into() });
        }
        Ok(v)
    }

    pub fn p_value(&self, alpha: &Vector) -> f64 {
        self.kind.p_value(alpha)
    }

    pub fn q_value(&self, theta: &Vector) -> f64 {
        self.kind.q_value(theta)
    }

    pub fn prox_p(&self, point: &Vector, step: f64) -> Vector {
        self.counters.prox_p.fetch_add(1, Ordering::Relaxed);
        self.kind.prox_p(point, step)
    }

    pub fn prox_q(&self, point: &Vector, step: f64) -> Vector {
        self.counters.prox_q.fetch_add(1, Ordering::Relaxed);
        self.kind.prox_q(point, step)
    }

    pub fn project_theta(&self, x: &Vector) -> Vector {
        self.kind.project_theta(x)
    }

    pub fn project_alpha(&self, x: &Vector) -> Vector {
        self.kind.project_alpha(x)
    }

    pub fn p_subgradient(&self, alpha: &Vector) -> Vector {
        self.kind.p_subgradient(alpha)
    }

    pub fn q_subgradient(&self, theta: &Vector) -> Vector {
        self.kind.q_subgradient(theta)
    }

    /// f = h - p + q on the feasible set.
    pub fn evaluate_f(&self, theta: &Vector, alpha: &Vector) -> Result<f64> {
        let v = self.h_value(theta, alpha)? - self.p_value(alpha) + self.q_value(theta);
        if !v.is_finite() {
            return Err(Error::NonFinite { context: "evaluate_f".into() });
        }
        Ok(v)
    }

    /// The attained inner objective h - p, in the orientation natural to the
    /// hosted problem (for the attack game: the attacked training objective,
    /// which the attack drives up).
    pub fn reported_objective(&self, h_minus_p: f64) -> f64 {
        match self.base_kind() {
            ProblemKind::LassoAttack(_) => -h_minus_p,
            _ => h_minus_p,
        }
    }

    fn base_kind(&self) -> &ProblemKind {
        let mut k = &self.kind;
        while let ProblemKind::Regularized { base, .. } = k {
            k = base;
        }
        k
    }

    /// Wrap the game with the concavity-restoring quadratic term
    /// h - lambda/2 ||alpha - alpha_hat||^2 and adjust the constants.
    pub fn regularized(&self, lambda: f64, alpha_hat: Vector) -> Result<MinMaxProblem> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        if alpha_hat.dim() != self.d_alpha {
            return Err(Error::DimensionMismatch {
                context: "regularized alpha_hat",
                expected: self.d_alpha,
                actual: alpha_hat.dim(),
            });
        }
        let mut constants = self.constants.clone();
        constants.l22 += lambda;
        constants.sigma += lambda;
        constants.grad_alpha_bound += lambda * constants.radius;
        let kind = ProblemKind::Regularized {
            base: Box::new(self.kind.clone()),
            lambda,
            alpha_hat,
        };
        let mut p = MinMaxProblem {
            kind,
            constants,
            d_theta: self.d_theta,
            d_alpha: self.d_alpha,
            seed: self.seed,
            hash: 0,
            counters: Arc::clone(&self.counters),
        };
        p.hash = p.compute_hash();
        Ok(p)
    }

    pub fn quadratic_parts(&self) -> Option<&QuadraticGame> {
        match self.base_kind() {
            ProblemKind::Quadratic(g) => Some(g),
            _ => None,
        }
    }

    pub fn lasso_parts(&self) -> Option<&LassoAttack> {
        match self.base_kind() {
            ProblemKind::LassoAttack(g) => Some(g),
            _ => None,
        }
    }

    fn check_dims(&self, theta: &Vector, alpha: &Vector) -> Result<()> {
        if theta.dim() != self.d_theta {
            return Err(Error::DimensionMismatch {
                context: "theta",
                expected: self.d_theta,
                actual: theta.dim(),
            });
        }
        if alpha.dim() != self.d_alpha {
            return Err(Error::DimensionMismatch {
                context: "alpha",
                expected: self.d_alpha,
                actual: alpha.dim(),
            });
        }
        Ok(())
    }

    fn compute_hash(&self) -> u64 {
        let mut h = fnv1a(self.kind.name().as_bytes());
        hash_f64s(
            &mut h,
            &[
                self.d_theta as f64,
                self.d_alpha as f64,
                self.constants.l11,
                self.constants.l22,
                self.constants.l12,
                self.constants.sigma,
                self.constants.radius,
                self.constants.lp,
                self.constants.grad_alpha_bound,
            ],
        );
        fn hash_kind(h: &mut u64, k: &ProblemKind) {
            match k {
                ProblemKind::Quadratic(g) => {
                    hash_f64s(h, g.q_mat.data());
                    hash_f64s(h, g.c_mat.data());
                    hash_f64s(h, g.s_mat.data());
                    hash_f64s(h, g.b.as_slice());
                    hash_f64s(h, &[g.tau_alpha, g.tau_theta, g.radius_theta, g.radius_alpha]);
                }
                ProblemKind::LassoAttack(g) => {
                    hash_f64s(h, g.a_hat.data());
                    hash_f64s(h, g.b.as_slice());
                    hash_f64s(h, &[g.xi, g.delta, g.x_radius]);
                }
                ProblemKind::ScalarHalfSpace(g) => hash_f64s(h, &[g.lower]),
                ProblemKind::Regularized { base, lambda, alpha_hat } => {
                    hash_kind(h, base);
                    hash_f64s(h, &[*lambda]);
                    hash_f64s(h, alpha_hat.as_slice());
                }
            }
        }
        hash_kind(&mut h, &self.kind);
        h
    }

    fn from_kind(kind: ProblemKind, constants: ProblemConstants, dims: (usize, usize), seed: Option<u64>) -> Result<MinMaxProblem> {
        constants.validate()?;
        let mut p = MinMaxProblem {
            kind,
            constants,
            d_theta: dims.0,
            d_alpha: dims.1,
            seed,
            hash: 0,
            counters: Arc::new(OracleCounters::default()),
        };
        p.hash = p.compute_hash();
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// constructors
// ---------------------------------------------------------------------------

/// Seeded quadratic test game: Q symmetric (possibly indefinite), C dense,
/// curvature block S = sigma * I, p = 0.1 ||alpha||_1, q = 0, both players
/// on unit balls. Constants are computed from the generated matrices by
/// power iteration.
pub fn make_quadratic_game(dims: (usize, usize), seed: u64, sigma: f64) -> Result<MinMaxProblem> {
    let (dt, da) = dims;
    if dt == 0 || da == 0 {
        return Err(Error::InvalidArgument("dims must be positive".into()));
    }
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {sigma}")));
    }
    let mut rng = rng_from_seed(seed);
    let raw = normal_vector(&mut rng, dt * dt, 1.0);
    let mut q = DenseMatrix::zeros(dt, dt);
    for i in 0..dt {
        for j in 0..dt {
            let v = 0.5 * (raw[i * dt + j] + raw[j * dt + i]);
            q.set(i, j, v);
        }
    }
    let c = DenseMatrix::from_vec(dt, da, normal_vector(&mut rng, dt * da, 1.0).as_slice().to_vec());
    let b = normal_vector(&mut rng, da, 1.0);
    let mut s = DenseMatrix::zeros(da, da);
    for i in 0..da {
        s.set(i, i, sigma);
    }
    quadratic_game_from_parts(
        QuadraticGame {
            q_mat: q,
            c_mat: c,
            s_mat: s,
            b,
            tau_alpha: 0.1,
            tau_theta: 0.0,
            radius_theta: 1.0,
            radius_alpha: 1.0,
        },
        Some(seed),
    )
}

/// Build a quadratic game from explicit matrices. S must be symmetric
/// positive semidefinite; its extreme eigenvalues give l22 and sigma.
pub fn quadratic_game_from_parts(g: QuadraticGame, seed: Option<u64>) -> Result<MinMaxProblem> {
    let dt = g.q_mat.rows;
    let da = g.s_mat.rows;
    if g.q_mat.cols != dt || g.s_mat.cols != da || g.c_mat.rows != dt || g.c_mat.cols != da || g.b.dim() != da {
        return Err(Error::InvalidArgument("inconsistent quadratic game shapes".into()));
    }
    if !(g.radius_theta > 0.0 && g.radius_alpha > 0.0) {
        return Err(Error::InvalidArgument("ball radii must be positive".into()));
    }
    if g.tau_alpha < 0.0 || g.tau_theta < 0.0 {
        return Err(Error::InvalidArgument("l1 weights must be nonnegative".into()));
    }
    let l11_raw = 2.0 * g.q_mat.spectral_norm();
    let l22_raw = g.s_mat.spectral_norm();
    let l11 = if l11_raw > 0.0 { l11_raw } else { ZERO_CURVATURE_LIPSCHITZ };
    let l22 = if l22_raw > 0.0 { l22_raw } else { ZERO_CURVATURE_LIPSCHITZ };
    let l12 = g.c_mat.spectral_norm();
    let sigma = if l22_raw > 0.0 { min_eigenvalue_psd(&g.s_mat) } else { 0.0 };
    let radius = g.radius_theta.max(g.radius_alpha);
    let lp = g.tau_alpha * (da as f64).sqrt();
    let grad_alpha_bound = l12 * g.radius_theta + l22_raw * g.radius_alpha + g.b.norm();
    let value_scale = 0.5 * l11 * g.radius_theta * g.radius_theta
        + l12 * g.radius_theta * g.radius_alpha
        + 0.5 * l22_raw * g.radius_alpha * g.radius_alpha
        + g.b.norm() * g.radius_alpha
        + lp * g.radius_alpha
        + g.tau_theta * (dt as f64).sqrt() * g.radius_theta;
    let coarse_gap = (2.0 * value_scale).max(1e-6);
    let constants = ProblemConstants {
        l11,
        l22,
        l12,
        sigma,
        radius,
        lp,
        grad_alpha_bound,
        delta_gap: coarse_gap,
        d_gap: coarse_gap,
    };
    MinMaxProblem::from_kind(ProblemKind::Quadratic(g), constants, (dt, da), seed)
}

/// Seeded attack instance: ground-truth weights with `sparsity` nonzeros at
/// random positions and standard-normal values, a standard-normal design
/// matrix, and observations b = A x* + e with e ~ N(0, noise_std^2 I).
pub fn make_lasso_attack(
    m: usize,
    n: usize,
    sparsity: usize,
    xi: f64,
    delta: f64,
    noise_std: f64,
    seed: u64,
) -> Result<MinMaxProblem> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("m and n must be positive".into()));
    }
    if sparsity == 0 || sparsity > n {
        return Err(Error::InvalidArgument(format!(
            "sparsity must be in 1..={n}, got {sparsity}"
        )));
    }
    if xi.is_nan() || xi <= 0.0 || delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidArgument("xi and delta must be positive".into()));
    }
    if noise_std.is_nan() || noise_std < 0.0 {
        return Err(Error::InvalidArgument("noise_std must be nonnegative".into()));
    }
    let mut rng = rng_from_seed(seed);
    let support = distinct_indices(&mut rng, n, sparsity);
    let values = normal_vector(&mut rng, sparsity, 1.0);
    let mut x_star = Vector::zeros(n);
    for (k, &j) in support.iter().enumerate() {
        x_star[j] = values[k];
    }
    let a_hat = DenseMatrix::from_vec(m, n, normal_vector(&mut rng, m * n, 1.0).as_slice().to_vec());
    let noise = normal_vector(&mut rng, m, noise_std);
    let b = a_hat.matvec(&x_star).add_scaled(1.0, &noise);

    lasso_attack_from_parts(
        LassoAttack {
            m,
            n,
            a_hat,
            b,
            xi,
            delta,
            x_star,
            noise,
            x_radius: 0.0, // filled below
        },
        Some(seed),
    )
}

/// Build the attack game from explicit data, estimating the x-radius from a
/// ridge solve when the stored one is not positive.
pub fn lasso_attack_from_parts(mut g: LassoAttack, seed: Option<u64>) -> Result<MinMaxProblem> {
    let (m, n) = (g.m, g.n);
    if g.a_hat.rows != m || g.a_hat.cols != n || g.b.dim() != m {
        return Err(Error::InvalidArgument("inconsistent attack game shapes".into()));
    }
    if g.x_radius <= 0.0 {
        g.x_radius = estimate_x_radius(&g.a_hat, &g.b);
    }
    let s_hat = g.a_hat.spectral_norm();
    let a_bound = s_hat + g.delta.sqrt();
    let r_alpha = g.x_radius;
    let b_norm = g.b.norm();
    let l22 = 2.0 * a_bound * a_bound;
    let l12 = 2.0 * a_bound * r_alpha + 2.0 * b_norm;
    let l11 = 2.0 * r_alpha * r_alpha;
    let lp = g.xi * (n as f64).sqrt();
    let grad_alpha_bound = 2.0 * a_bound * (a_bound * r_alpha + b_norm);
    let residual_bound = a_bound * r_alpha + b_norm;
    let coarse_gap = (2.0 * (residual_bound * residual_bound + lp * r_alpha)).max(1e-6);
    let constants = ProblemConstants {
        l11,
        l22,
        l12,
        sigma: 0.0,
        radius: r_alpha,
        lp,
        grad_alpha_bound,
        delta_gap: coarse_gap,
        d_gap: coarse_gap,
    };
    let dims = (m * n, n);
    MinMaxProblem::from_kind(ProblemKind::LassoAttack(g), constants, dims, seed)
}

/// Twice the norm of a cheap ridge estimate of the inner minimizer, used as
/// the working radius for the unconstrained x player.
fn estimate_x_radius(a: &DenseMatrix, b: &Vector) -> f64 {
    let m = a.rows;
    // Gram matrix A A' with a small proportional ridge.
    let mut gram = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let ri = &a.data()[i * a.cols..(i + 1) * a.cols];
            let rj = &a.data()[j * a.cols..(j + 1) * a.cols];
            let v: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    let trace: f64 = (0..m).map(|i| gram.get(i, i)).sum();
    let mu = 1e-6 * (trace / m as f64).max(1e-12);
    for i in 0..m {
        gram.set(i, i, gram.get(i, i) + mu);
    }
    let y = cholesky_solve(&gram, b).unwrap_or_else(|| Vector::zeros(m));
    let x_ridge = a.matvec_t(&y);
    (2.0 * x_ridge.norm()).max(1e-6)
}

/// The one-dimensional half-space instance used to compare the two
/// stationarity notions: minimize theta^2/2 over theta >= lower.
pub fn make_scalar_halfspace(lower: f64) -> Result<MinMaxProblem> {
    let constants = ProblemConstants {
        l11: 1.0,
        l22: 1.0,
        l12: 0.0,
        sigma: 0.0,
        radius: 1.0_f64.max(lower.abs()),
        lp: 0.0,
        grad_alpha_bound: 0.0,
        delta_gap: 1.0,
        d_gap: 1.0,
    };
    MinMaxProblem::from_kind(
        ProblemKind::ScalarHalfSpace(ScalarHalfSpace { lower }),
        constants,
        (1, 1),
        None,
    )
}

// ---------------------------------------------------------------------------
// problem files
// ---------------------------------------------------------------------------

/// Serializable image of a problem instance: dims, constants, dense data
/// row-major, and the generating seed, so a run is exactly reproducible.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: u32,
    pub kind: String,
    pub seed: Option<u64>,
    pub d_theta: usize,
    pub d_alpha: usize,
    pub constants: ProblemConstants,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticGame>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lasso_attack: Option<LassoAttack>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scalar_halfspace: Option<ScalarHalfSpace>,
}

pub const PROBLEM_FILE_VERSION: u32 = 1;

impl MinMaxProblem {
    pub fn to_file(&self) -> Result<ProblemFile> {
        let mut f = ProblemFile {
            version: PROBLEM_FILE_VERSION,
            kind: self.kind.name().to_string(),
            seed: self.seed,
            d_theta: self.d_theta,
            d_alpha: self.d_alpha,
            constants: self.constants.clone(),
            quadratic: None,
            lasso_attack: None,
            scalar_halfspace: None,
        };
        match &self.kind {
            ProblemKind::Quadratic(g) => f.quadratic = Some(g.clone()),
            ProblemKind::LassoAttack(g) => f.lasso_attack = Some(g.clone()),
            ProblemKind::ScalarHalfSpace(g) => f.scalar_halfspace = Some(g.clone()),
            ProblemKind::Regularized { .. } => {
                return Err(Error::InvalidArgument(
                    "regularized wrappers are runtime-only and not serializable".into(),
                ))
            }
        }
        Ok(f)
    }

    pub fn from_file(f: ProblemFile) -> Result<MinMaxProblem> {
        if f.version != PROBLEM_FILE_VERSION {
            return Err(Error::Format {
                location: "problem file".into(),
                message: format!("unsupported version {}", f.version),
            });
        }
        let kind = match f.kind.as_str() {
            "quadratic" => ProblemKind::Quadratic(f.quadratic.ok_or_else(|| Error::Format {
                location: "problem file".into(),
                message: "missing [quadratic] table".into(),
            })?),
            "lasso-attack" => {
                ProblemKind::LassoAttack(f.lasso_attack.ok_or_else(|| Error::Format {
                    location: "problem file".into(),
                    message: "missing [lasso-attack] table".into(),
                })?)
            }
            "scalar-halfspace" => {
                ProblemKind::ScalarHalfSpace(f.scalar_halfspace.ok_or_else(|| Error::Format {
                    location: "problem file".into(),
                    message: "missing [scalar-halfspace] table".into(),
                })?)
            }
            other => {
                return Err(Error::Format {
                    location: "problem file".into(),
                    message: format!("unknown kind {other:?}"),
                })
            }
        };
        MinMaxProblem::from_kind(kind, f.constants, (f.d_theta, f.d_alpha), f.seed)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = self.to_file()?;
        let text = toml::to_string(&file).map_err(|e| Error::Format {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<MinMaxProblem> {
        let text = std::fs::read_to_string(path)?;
        let file: ProblemFile = toml::from_str(&text).map_err(|e| Error::Format {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        MinMaxProblem::from_file(file)
    }
}
