//! Solvers and instrumentation for non-smooth min-max games of the form
//!
//! ```text
//! min over theta in Theta,  max over alpha in A  of
//!     h(theta, alpha) - p(alpha) + q(theta)
//! ```
//!
//! with h smooth and (strongly) concave in alpha, p and q convex and
//! possibly non-smooth. The main solver is a multi-step accelerated
//! proximal gradient descent-ascent with restarted momentum; a quadratic
//! regularization wrapper reduces merely-concave games to the strongly
//! concave case. Stationarity is reported through subproblem-value
//! measures that are zero exactly at first-order Nash equilibria, together
//! with the weaker prox-displacement residuals. Single-step descent-ascent
//! baselines, an attack-on-regression experiment harness, and CSV trace
//! output round out the crate.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod solver;
pub mod stationarity;
pub mod trace;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Vector};
pub use problem::{
    make_lasso_attack, make_quadratic_game, make_scalar_halfspace, MinMaxProblem,
    OracleCounts, ProblemConstants,
};
pub use solver::{
    derive_params_concave, derive_params_strongly_concave, inner_accelerated_ascent, solve,
    solve_concave, SolverParams, StoppingRule,
};
pub use stationarity::{measure_type1, measure_x, measure_y, StationarityReport};
pub use trace::{RunTrace, TraceRow};
