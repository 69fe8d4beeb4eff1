//! Two-level quadratic problems, Galerkin coarse reduction, prolongation
//! operators and the first/second-order Galerkin Taylor models.
//!
//! The quadratic objective is
//!   F(x1 + P x2) = 1/2 (x1 + P x2)^T A (x1 + P x2) + b^T (x1 + P x2)
//! with A symmetric positive definite on the fine space and P a full-rank
//! prolongation from the coarse space. Restricting the minimization to the
//! coarse variables yields H = P^T A P and c = P^T (A x1 + b); note the
//! transposes are oriented so every product is well formed for an n1 x n2
//! prolongation.

use crate::error::{Error, Result};
use crate::numerics::{dot, spd_solve, DenseMatrix};
use std::io::{BufRead, Write};

/// The fine-level quadratic with its prolongation.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub p: DenseMatrix,
}

/// Galerkin reduction of the quadratic at a fixed fine iterate.
#[derive(Debug, Clone)]
pub struct CoarseQuadratic {
    pub h: DenseMatrix,
    pub c: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>, p: DenseMatrix) -> Result<Self> {
        let n1 = a.rows();
        if a.cols() != n1 || b.len() != n1 || p.rows() != n1 {
            return Err(Error::DimensionMismatch {
                expected: n1,
                got: p.rows(),
                context: "quadratic problem dimensions",
            });
        }
        if p.cols() > n1 {
            return Err(Error::DimensionMismatch {
                expected: n1,
                got: p.cols(),
                context: "coarse dimension must not exceed the fine dimension",
            });
        }
        a.check_symmetric()?;
        Ok(Self { a, b, p })
    }

    pub fn fine_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn coarse_dim(&self) -> usize {
        self.p.cols()
    }

    /// F(x1 + P x2).
    pub fn full_objective(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        if x1.len() != self.fine_dim() || x2.len() != self.coarse_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.fine_dim(),
                got: x1.len(),
                context: "full_objective arguments",
            });
        }
        let mut v = self.p.matvec(x2);
        for (vi, x) in v.iter_mut().zip(x1) {
            *vi += x;
        }
        let av = self.a.matvec(&v);
        Ok(0.5 * dot(&v, &av) + dot(&self.b, &v))
    }

    /// Gradient of F with respect to the combined fine vector at x1 + P x2.
    pub fn fine_gradient(&self, x1: &[f64], x2: &[f64]) -> Vec<f64> {
        let mut v = self.p.matvec(x2);
        for (vi, x) in v.iter_mut().zip(x1) {
            *vi += x;
        }
        let mut g = self.a.matvec(&v);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi += bi;
        }
        g
    }

    /// Galerkin coarse reduction at x1 (with the x2 expansion point at 0):
    /// H = P^T A P, c = P^T (A x1 + b). Rank deficiency of P shows up as a
    /// failed Cholesky pivot when H is factored downstream; it is checked
    /// here eagerly so the error names the operator.
    pub fn coarse_reduce(&self, x1: &[f64]) -> Result<CoarseQuadratic> {
        if x1.len() != self.fine_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.fine_dim(),
                got: x1.len(),
                context: "coarse_reduce iterate",
            });
        }
        let ap = self.a.matmul(&self.p);
        let h = self.p.transpose().matmul(&ap);
        // P full column rank <=> P^T A P positive definite (A is SPD).
        if let Err(Error::NotSpd { pivot }) = crate::numerics::spd_check(&h, 1e-12) {
            return Err(Error::RankDeficient { col: pivot });
        }
        let mut ax1b = self.a.matvec(x1);
        for (v, bi) in ax1b.iter_mut().zip(&self.b) {
            *v += bi;
        }
        let c = self.p.matvec_transposed(&ax1b);
        Ok(CoarseQuadratic { h, c })
    }
}

impl CoarseQuadratic {
    /// 1/2 x2^T H x2 + c^T x2.
    pub fn objective(&self, x2: &[f64]) -> f64 {
        let hx = self.h.matvec(x2);
        0.5 * dot(x2, &hx) + dot(&self.c, x2)
    }

    /// Coarse minimizer via the direct SPD solver.
    pub fn minimizer(&self) -> Result<Vec<f64>> {
        let neg_c: Vec<f64> = self.c.iter().map(|v| -v).collect();
        spd_solve(&self.h, &neg_c)
    }
}

/// Standard 1-D linear interpolation from n2 coarse interior points to
/// 2*n2 + 1 fine interior points: each column is the (1/2, 1, 1/2) stencil
/// centred on the matching fine node.
pub fn linear_prolongation(n2: usize) -> DenseMatrix {
    assert!(n2 >= 1, "prolongation needs at least one coarse point");
    let n1 = 2 * n2 + 1;
    let mut p = DenseMatrix::zeros(n1, n2);
    for j in 0..n2 {
        let centre = 2 * j + 1;
        p.set(centre - 1, j, 0.5);
        p.set(centre, j, 1.0);
        p.set(centre + 1, j, 0.5);
    }
    p
}

/// First-order Galerkin Taylor model: h1(dx2) = sigma (P^T grad)^T dx2.
pub fn taylor_h1(grad_f: &[f64], p: &DenseMatrix, sigma: f64, dx2: &[f64]) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    dot(&p.matvec_transposed(grad_f), dx2)
        * sigma
}

/// Second-order Galerkin Taylor model:
/// h2(dx2) = sigma (P^T grad)^T dx2 + 1/2 sigma^2 dx2^T (P^T H P) dx2.
/// For the quadratic objective and sigma = 1 this is exactly the coarse
/// quadratic increment of `coarse_reduce`.
pub fn taylor_h2(
    grad_f: &[f64],
    hess_f: &DenseMatrix,
    p: &DenseMatrix,
    sigma: f64,
    dx2: &[f64],
) -> Result<f64> {
    hess_f.check_symmetric()?;
    let linear = taylor_h1(grad_f, p, sigma, dx2);
    let pdx = p.matvec(dx2);
    let hpdx = hess_f.matvec(&pdx);
    Ok(linear + 0.5 * sigma * sigma * dot(&pdx, &hpdx))
}

/// Writes a quadratic problem in the text matrix format:
/// each section is a name line with dimensions followed by row-major
/// entries, one row per line.
pub fn save_quadratic<W: Write>(qp: &QuadraticProblem, mut out: W) -> Result<()> {
    let write_matrix = |out: &mut W, name: &str, m: &DenseMatrix| -> Result<()> {
        writeln!(out, "{name} {} {}", m.rows(), m.cols())?;
        for i in 0..m.rows() {
            let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    };
    write_matrix(&mut out, "A", &qp.a)?;
    writeln!(out, "b {}", qp.b.len())?;
    let row: Vec<String> = qp.b.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(out, "{}", row.join(" "))?;
    write_matrix(&mut out, "P", &qp.p)?;
    Ok(())
}

struct LineReader<R: BufRead> {
    lines: std::iter::Enumerate<std::io::Lines<R>>,
}

impl<R: BufRead> LineReader<R> {
    fn next(&mut self) -> Result<(usize, String)> {
        loop {
            match self.lines.next() {
                Some((i, Ok(l))) => {
                    if !l.trim().is_empty() {
                        return Ok((i + 1, l));
                    }
                }
                Some((i, Err(e))) => {
                    return Err(Error::Parse { line: i + 1, message: e.to_string() })
                }
                None => {
                    return Err(Error::Parse { line: 0, message: "unexpected end of file".into() })
                }
            }
        }
    }

    fn header(&mut self, name: &str, dims: usize) -> Result<Vec<usize>> {
        let (line, text) = self.next()?;
        let mut parts = text.split_whitespace();
        let got = parts.next().unwrap_or("");
        if got != name {
            return Err(Error::Parse {
                line,
                message: format!("expected section {name:?}, got {got:?}"),
            });
        }
        let sizes: Vec<usize> = parts
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line, message: format!("bad dimensions for {name}") })?;
        if sizes.len() != dims || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Parse {
                line,
                message: format!("{name} needs {dims} positive dimension(s)"),
            });
        }
        const MAX_DIM: usize = 1 << 16;
        if sizes.iter().any(|&s| s > MAX_DIM) {
            return Err(Error::Parse { line, message: format!("{name} dimension exceeds {MAX_DIM}") });
        }
        Ok(sizes)
    }

    fn row(&mut self, cols: usize) -> Result<Vec<f64>> {
        let (line, text) = self.next()?;
        let row: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line, message: "bad matrix entry".into() })?;
        if row.len() != cols {
            return Err(Error::Parse {
                line,
                message: format!("expected {cols} entries, got {}", row.len()),
            });
        }
        Ok(row)
    }

    fn matrix(&mut self, name: &str) -> Result<DenseMatrix> {
        let dims = self.header(name, 2)?;
        let mut m = DenseMatrix::zeros(dims[0], dims[1]);
        for i in 0..dims[0] {
            for (j, v) in self.row(dims[1])?.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }
}

/// Parses the text matrix format produced by [`save_quadratic`].
pub fn load_quadratic<R: BufRead>(input: R) -> Result<QuadraticProblem> {
    let mut reader = LineReader { lines: input.lines().enumerate() };
    let a = reader.matrix("A")?;
    let bdims = reader.header("b", 1)?;
    let b = reader.row(bdims[0])?;
    let p = reader.matrix("P")?;
    QuadraticProblem::new(a, b, p)
}
