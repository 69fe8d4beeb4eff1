use super::DenseMatrix;
use crate::error::{Error, Result};

/// Verifies that a symmetric matrix is numerically positive definite:
/// every Cholesky pivot must exceed `rel_tol` times the largest diagonal
/// entry. Reports the first failing pivot index.
pub fn spd_check(a: &DenseMatrix, rel_tol: f64) -> Result<()> {
    let n = a.rows();
    a.check_symmetric()?;
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(a.get(i, i).abs()));
    let floor = rel_tol * max_diag;
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > floor) || !diag.is_finite() {
            return Err(Error::NotSpd { pivot: j });
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(())
}

/// Solves A x = b for symmetric positive definite A by Cholesky factorization.
///
/// This is the verification oracle for the Galerkin coarse problems, so it
/// insists on symmetry up front and reports the failing pivot when the
/// factorization breaks down.
pub fn spd_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
            context: "spd_solve requires a square matrix",
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
            context: "spd_solve right-hand side",
        });
    }
    a.check_symmetric()?;

    // Lower-triangular factor stored row-major.
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotSpd { pivot: j });
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }

    // Forward substitution L y = b.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // Back substitution L^T x = y.
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{norm2, DenseMatrix};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let a = DenseMatrix::identity(3);
        let x = spd_solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn diagonal_solve() {
        let mut a = DenseMatrix::zeros(2, 2);
        a.set(0, 0, 2.0);
        a.set(1, 1, 4.0);
        let x = spd_solve(&a, &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15, "{x:?}");
    }

    #[test]
    fn random_spd_residual_below_tolerance() {
        // A = M M^T + n I is SPD for any M.
        let n = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = DenseMatrix::from_rows(
            n,
            n,
            (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let mut a = m.matmul(&m.transpose());
        for i in 0..n {
            a.set(i, i, a.get(i, i) + n as f64);
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = spd_solve(&a, &b).unwrap();
        let mut r = a.matvec(&x);
        for i in 0..n {
            r[i] -= b[i];
        }
        let bound = 1e-10 * (a.frobenius_norm() * norm2(&x) + norm2(&b));
        assert!(norm2(&r) <= bound, "residual {} above {}", norm2(&r), bound);
    }

    #[test]
    fn non_spd_reports_pivot() {
        let mut a = DenseMatrix::identity(3);
        a.set(1, 1, -1.0);
        match spd_solve(&a, &[1.0, 1.0, 1.0]) {
            Err(crate::error::Error::NotSpd { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotSpd, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let mut a = DenseMatrix::identity(2);
        a.set(0, 1, 0.5);
        assert!(spd_solve(&a, &[1.0, 1.0]).is_err());
    }
}
