//! Dense vectors and matrices, seeded sampling, and a direct SPD solver.
//!
//! Everything here is deliberately small and dense: the hierarchical
//! quadratic problems stay below a few dozen unknowns and the sampling
//! routines feed the training pools. All computation is in f64.

mod cholesky;
mod jet;
mod sampling;

pub use cholesky::{spd_check, spd_solve};
pub use jet::Jet2;
pub use sampling::{lhs_sample, lhs_sample_with, sample_normal, sample_normal_with, Seed};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from row-major entries. Panics if the entry count is wrong.
    pub fn from_rows(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must equal rows*cols");
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            y[i] = dot(self.row(i), x);
        }
        y
    }

    /// y = A^T x without forming the transpose.
    pub fn matvec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec_transposed dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += self.get(i, j) * xi;
            }
        }
        y
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Frobenius norm, used in residual tolerances.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Checks |A_ij - A_ji| <= 1e-12 * max|A| for all pairs.
    pub fn check_symmetric(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
                context: "symmetry check on non-square matrix",
            });
        }
        let tol = 1e-12 * self.max_abs();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators so the reduction vectorizes.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// y += c * x
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for i in 0..y.len() {
        y[i] += c * x[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_roundtrip() {
        let m = DenseMatrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().get(2, 1), 6.0);
    }

    #[test]
    fn matvec_identity() {
        let m = DenseMatrix::identity(3);
        assert_eq!(m.matvec(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn matvec_transposed_matches_explicit_transpose() {
        let m = DenseMatrix::from_rows(3, 2, vec![1.0, -2.0, 0.5, 4.0, 3.0, 7.0]);
        let x = [0.3, -1.2, 2.5];
        assert_eq!(m.matvec_transposed(&x), m.transpose().matvec(&x));
    }

    #[test]
    fn symmetry_check_flags_asymmetric() {
        let mut m = DenseMatrix::identity(2);
        m.set(0, 1, 1e-3);
        assert!(m.check_symmetric().is_err());
        m.set(1, 0, 1e-3);
        assert!(m.check_symmetric().is_ok());
    }
}
