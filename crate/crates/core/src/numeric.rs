//! Deterministic floating-point kernels: fixed-order pairwise summation,
//! moment helpers, a dense LU solver and a one-sided Jacobi
//! orthogonalizer for small column blocks.
//!
//! Every routine here is sequential with a fixed evaluation order, so
//! results are bit-identical across runs and thread counts.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Pairwise (cascade) summation with a fixed recursion pattern.
///
/// Error grows like O(log n) instead of O(n) for naive accumulation,
/// and the fixed split makes the result independent of the caller's
/// scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const SEQ_CUTOFF: usize = 32;
    if values.len() <= SEQ_CUTOFF {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Sum of squared deviations from `center`.
pub fn sum_sq_dev(values: &[f64], center: f64) -> f64 {
    let terms: Vec<f64> = values.iter().map(|v| (v - center) * (v - center)).collect();
    pairwise_sum(&terms)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&terms)
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Treats a vector as numerically constant when its spread is at the
/// rounding-noise level relative to its magnitude.
pub fn is_zero_variance(values: &[f64], ssd: f64) -> bool {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * scale;
    ssd <= values.len() as f64 * floor * floor
}

/// Solves the dense system `a x = b` by LU factorization with partial
/// pivoting. `a` is row-major n*n and is consumed as scratch.
pub fn lu_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = a[perm[col] * n + col].abs();
        for r in col + 1..n {
            let cand = a[perm[r] * n + col].abs();
            if cand > pivot_abs {
                pivot_abs = cand;
                pivot_row = r;
            }
        }
        if pivot_abs < f64::MIN_POSITIVE * 16.0 {
            return Err(Error::SingularSystem);
        }
        perm.swap(col, pivot_row);
        let prow = perm[col];
        let pivot = a[prow * n + col];
        for &row in perm.iter().skip(col + 1) {
            let factor = a[row * n + col] / pivot;
            if factor != 0.0 {
                a[row * n + col] = factor;
                for c in col + 1..n {
                    a[row * n + c] -= factor * a[prow * n + c];
                }
            }
        }
    }
    // Forward substitution on the permuted right-hand side.
    let mut y = vec![0.0; n];
    for (i, &row) in perm.iter().enumerate() {
        let mut acc = b[row];
        for (j, yj) in y.iter().enumerate().take(i) {
            acc -= a[row * n + j] * yj;
        }
        y[i] = acc;
    }
    // Back substitution.
    for i in (0..n).rev() {
        let row = perm[i];
        let mut acc = y[i];
        for j in i + 1..n {
            acc -= a[row * n + j] * b[j];
        }
        b[i] = acc / a[row * n + i];
    }
    Ok(b)
}

/// One-sided Jacobi orthogonalization of a set of column vectors.
///
/// Rotates column pairs until they are mutually orthogonal; the final
/// column euclidean norms are the singular values of the original
/// matrix. Columns are modified in place and `sigma[k]` is returned for
/// each column.
pub fn jacobi_orthogonalize(cols: &mut [Vec<f64>]) -> Vec<f64> {
    const MAX_SWEEPS: usize = 60;
    const TOL: f64 = 1e-15;
    let p = cols.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let (head, tail) = cols.split_at_mut(j);
                let ci = &mut head[i];
                let cj = &mut tail[0];
                let aii = dot(ci, ci);
                let ajj = dot(cj, cj);
                let aij = dot(ci, cj);
                if aij.abs() <= TOL * libm::sqrt(aii * ajj) {
                    continue;
                }
                rotated = true;
                let theta = 0.5 * libm::atan2(2.0 * aij, aii - ajj);
                let c = libm::cos(theta);
                let s = libm::sin(theta);
                for (vi, vj) in ci.iter_mut().zip(cj.iter_mut()) {
                    let a = *vi;
                    let b = *vj;
                    *vi = c * a + s * b;
                    *vj = -s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter().map(|c| norm2(c)).collect()
}
