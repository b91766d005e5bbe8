//! Seeded, reproducible random generation.
//!
//! All randomness in the crate flows through a ChaCha8 stream seeded from a
//! caller-supplied u64, so a recorded seed reproduces a run bit-for-bit.
//! Normal variates use Box-Muller on the raw uniform stream to stay
//! independent of distribution-crate internals.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Vector;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard normal draw via Box-Muller.
pub fn standard_normal(rng: &mut SeededRng) -> f64 {
    // u1 in (0,1] so the log is finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn normal_vector(rng: &mut SeededRng, dim: usize, std: f64) -> Vector {
    Vector::from_vec((0..dim).map(|_| std * standard_normal(rng)).collect())
}

/// Uniform draw from the Euclidean ball of the given radius.
pub fn uniform_in_ball(rng: &mut SeededRng, dim: usize, radius: f64) -> Vector {
    let dir = normal_vector(rng, dim, 1.0);
    let n = dir.norm();
    if n == 0.0 {
        return Vector::zeros(dim);
    }
    let u: f64 = rng.random::<f64>();
    let r = radius * u.powf(1.0 / dim as f64);
    dir.scale(r / n)
}

/// `count` distinct indices in [0, n), by partial Fisher-Yates.
pub fn distinct_indices(rng: &mut SeededRng, n: usize, count: usize) -> Vec<usize> {
    assert!(count <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}
