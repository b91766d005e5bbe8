//! Independent oracles shared by the integration suites. Everything here
//! deliberately avoids the library's solver paths: coordinate descent,
//! grid enumeration, golden-section search, and finite differences are the
//! second routes the main implementations are checked against.

#![allow(dead_code)]

use minmax_core::linalg::{DenseMatrix, Vector};

/// Exact minimizer of F(x) = x'Ax/2 - b'x + tau ||x||_1 by cyclic
/// coordinate descent. A must be symmetric positive definite. Runs until
/// the largest coordinate move in a sweep is at most `tol`.
pub fn coordinate_descent_l1(
    a: &DenseMatrix,
    b: &Vector,
    tau: f64,
    tol: f64,
    max_sweeps: usize,
) -> (Vector, f64) {
    let n = b.dim();
    let mut x = Vector::zeros(n);
    // running product a_x = A x
    let mut ax = Vector::zeros(n);
    for _ in 0..max_sweeps {
        let mut biggest = 0.0f64;
        for i in 0..n {
            let aii = a.get(i, i);
            let lin = b[i] - (ax[i] - aii * x[i]);
            let shrunk = {
                // inline scalar shrink, independent of the library's prox
                if lin > tau {
                    (lin - tau) / aii
                } else if lin < -tau {
                    (lin + tau) / aii
                } else {
                    0.0
                }
            };
            let delta = shrunk - x[i];
            if delta != 0.0 {
                for j in 0..n {
                    ax[j] += delta * a.get(j, i);
                }
                x[i] = shrunk;
                biggest = biggest.max(delta.abs());
            }
        }
        if biggest <= tol {
            break;
        }
    }
    let f = 0.5 * x.dot(&ax) - b.dot(&x) + tau * x.norm1();
    (x, f)
}

/// Value of F(x) = x'Ax/2 - b'x + tau||x||_1 at a point.
pub fn quad_l1_value(a: &DenseMatrix, b: &Vector, tau: f64, x: &Vector) -> f64 {
    0.5 * x.dot(&a.matvec(x)) - b.dot(x) + tau * x.norm1()
}

/// Brute-force minimum of a scalar-valued function over the grid points of
/// the square [-r, r]^2 that fall inside the Euclidean ball of radius r.
/// Returns the best value and its location.
pub fn grid_min_2d(f: impl Fn(f64, f64) -> f64, r: f64, points_per_axis: usize) -> (f64, [f64; 2]) {
    let mut best = f64::INFINITY;
    let mut arg = [0.0, 0.0];
    let k = points_per_axis - 1;
    for i in 0..points_per_axis {
        let x = -r + 2.0 * r * i as f64 / k as f64;
        for j in 0..points_per_axis {
            let y = -r + 2.0 * r * j as f64 / k as f64;
            if x * x + y * y > r * r * (1.0 + 1e-12) {
                continue;
            }
            let v = f(x, y);
            if v < best {
                best = v;
                arg = [x, y];
            }
        }
    }
    (best, arg)
}

/// Golden-section minimization of a unimodal scalar function on [lo, hi].
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Central-difference gradient of a scalar function of a vector.
pub fn finite_diff_grad(f: impl Fn(&Vector) -> f64, x: &Vector, h: f64) -> Vector {
    let mut out = Vector::zeros(x.dim());
    let mut probe = x.clone();
    for i in 0..x.dim() {
        let xi = probe[i];
        probe[i] = xi + h;
        let fp = f(&probe);
        probe[i] = xi - h;
        let fm = f(&probe);
        probe[i] = xi;
        out[i] = (fp - fm) / (2.0 * h);
    }
    out
}

/// Random symmetric matrix with prescribed eigenvalues, built from a seeded
/// random rotation (Gram-Schmidt on a Gaussian matrix).
pub fn symmetric_with_spectrum(eigs: &[f64], seed: u64) -> DenseMatrix {
    use minmax_core::rng::{normal_vector, rng_from_seed};
    let n = eigs.len();
    let mut rng = rng_from_seed(seed);
    // orthonormal basis by Gram-Schmidt
    let mut basis: Vec<Vector> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v = normal_vector(&mut rng, n, 1.0);
        for u in &basis {
            let proj = v.dot(u);
            v = v.add_scaled(-proj, u);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v.scale(1.0 / norm));
        }
    }
    let mut m = DenseMatrix::zeros(n, n);
    for (k, u) in basis.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, m.get(i, j) + eigs[k] * u[i] * u[j]);
            }
        }
    }
    m
}
