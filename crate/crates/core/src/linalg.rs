//! Dense vectors and matrices.
//!
//! Everything in this crate works on flat `f64` storage; matrices are
//! row-major and matrix-valued decision variables are handled flattened
//! with their shape carried alongside.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn from_vec(data: Vec<f64>) -> Self {
        Vector { data }
    }

    pub fn from_slice(data: &[f64]) -> Self {
        Vector { data: data.to_vec() }
    }

    pub fn zeros(dim: usize) -> Self {
        Vector { data: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector { data: self.data.iter().map(|x| s * x).collect() }
    }

    /// self + s * other
    pub fn add_scaled(&self, s: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.add_scaled(-1.0, other)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        DenseMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// A x
    pub fn matvec(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.cols, x.dim());
        let out = self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum())
            .collect();
        Vector::from_vec(out)
    }

    /// A' x
    pub fn matvec_t(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.rows, x.dim());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += xi * a;
            }
        }
        Vector::from_vec(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest singular value, by power iteration on A'A.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.iter().all(|&x| x == 0.0) {
            return 0.0;
        }
        let lam = power_iteration(|v| self.matvec_t(&self.matvec(v)), self.cols, 500, 1e-14);
        lam.max(0.0).sqrt()
    }
}

/// Dominant eigenvalue (in absolute value) of a symmetric operator given as
/// a matvec closure. Deterministic start vector; Rayleigh-quotient estimate.
pub fn power_iteration(
    apply: impl Fn(&Vector) -> Vector,
    dim: usize,
    max_iters: usize,
    tol: f64,
) -> f64 {
    let mut v = Vector::from_vec((0..dim).map(|i| 1.0 + 1e-3 * i as f64).collect());
    let n = v.norm();
    v = v.scale(1.0 / n);
    let mut lam = 0.0;
    for _ in 0..max_iters {
        let w = apply(&v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w.scale(1.0 / nw);
        if (next - lam).abs() <= tol * next.abs().max(1.0) {
            return next.abs();
        }
        lam = next;
    }
    lam.abs()
}

/// Smallest eigenvalue of a symmetric positive semidefinite matrix:
/// lambda_min(S) = ||S|| - lambda_max(||S|| I - S).
pub fn min_eigenvalue_psd(s: &DenseMatrix) -> f64 {
    assert_eq!(s.rows, s.cols);
    let top = power_iteration(|v| s.matvec(v), s.cols, 500, 1e-14);
    if top == 0.0 {
        return 0.0;
    }
    let shifted = power_iteration(
        |v| v.scale(top).sub(&s.matvec(v)),
        s.cols,
        500,
        1e-14,
    );
    (top - shifted).max(0.0)
}

/// Solve S y = rhs for symmetric positive definite S by Cholesky.
/// Returns None if a pivot is not strictly positive.
pub fn cholesky_solve(s: &DenseMatrix, rhs: &Vector) -> Option<Vector> {
    assert_eq!(s.rows, s.cols);
    assert_eq!(s.rows, rhs.dim());
    let n = s.rows;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(Vector::from_vec(x))
}

/// Stable 64-bit FNV-1a, used for problem and spec fingerprints.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Feed f64 values into an FNV stream byte-for-byte.
pub fn hash_f64s(h: &mut u64, values: &[f64]) {
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            *h ^= b as u64;
            *h = h.wrapping_mul(0x100000001b3);
        }
    }
}
