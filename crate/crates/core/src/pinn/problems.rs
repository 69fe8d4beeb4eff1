//! The five benchmark Poisson problems.
//!
//! Each problem carries its exact solution as a jet-evaluable closure, so
//! construction can verify that the source term really is the Laplacian of
//! the stated solution and that the boundary data match, to 1e-8 at a
//! thousand random checkpoints. The printed formulas of test problems 1 and
//! 2 are not internally consistent; both are repaired by deriving the
//! missing pieces from the particular solution (see the individual
//! constructors).

use super::geometry::{BoundaryId, Geometry};
use super::{BoundaryCondition, LossWeights, PoissonProblem};
use crate::error::{Error, Result};
use crate::numerics::{Jet2, Seed};
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;

/// Exact solution evaluated through second-order jets: one pass per axis
/// yields the value, the gradient and the Laplacian analytically.
#[derive(Clone)]
pub struct ExactSolution {
    f: Arc<dyn Fn(Jet2, Jet2) -> Jet2 + Send + Sync>,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ExactSolution")
    }
}

impl ExactSolution {
    pub fn new(f: impl Fn(Jet2, Jet2) -> Jet2 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        (self.f)(Jet2::constant(z[0]), Jet2::constant(z[1])).val
    }

    pub fn gradient(&self, z: &[f64]) -> [f64; 2] {
        let jx = (self.f)(Jet2::variable(z[0]), Jet2::constant(z[1]));
        let jy = (self.f)(Jet2::constant(z[0]), Jet2::variable(z[1]));
        [jx.d, jy.d]
    }

    pub fn laplacian(&self, z: &[f64]) -> f64 {
        let jx = (self.f)(Jet2::variable(z[0]), Jet2::constant(z[1]));
        let jy = (self.f)(Jet2::constant(z[0]), Jet2::variable(z[1]));
        jx.dd + jy.dd
    }
}

/// Hierarchical benchmark: Dirichlet data equal to
/// u(z) = cos(alpha pi z1 + pi z2) + cos(pi z1 + beta pi z2) on both
/// boundaries of the square-with-circle domain, with the source chosen so u
/// is the exact solution.
pub fn make_hier_problem(alpha: i64, beta: i64) -> Result<PoissonProblem> {
    let (a, b) = (alpha as f64, beta as f64);
    let exact = ExactSolution::new(move |x, y| {
        (x * (a * PI) + y * PI).cos() + (x * PI + y * (b * PI)).cos()
    });
    let source = move |z: &[f64; 2]| {
        let c1 = (a * PI * z[0] + PI * z[1]).cos();
        let c2 = (PI * z[0] + b * PI * z[1]).cos();
        -((a * PI).powi(2) + PI * PI) * c1 - (PI * PI + (b * PI).powi(2)) * c2
    };
    let dirichlet = move |z: &[f64; 2]| {
        (a * PI * z[0] + PI * z[1]).cos() + (PI * z[0] + b * PI * z[1]).cos()
    };
    let problem = PoissonProblem {
        name: format!("hier-a{alpha}-b{beta}"),
        geometry: Geometry::square_with_circle(),
        source: Arc::new(source),
        external_bc: BoundaryCondition::dirichlet(Arc::new(dirichlet)),
        internal_bc: BoundaryCondition::dirichlet(Arc::new(dirichlet)),
        weights: LossWeights { lambda_omega: 1.0, lambda_gamma_e: 1.0, lambda_gamma_i: 1.0 },
        exact: Some(exact),
    };
    problem.self_consistency_check(1000, 1e-8, Seed(0xC0FFEE))?;
    Ok(problem)
}

/// Test problems 1-4. The four-lobe constants of problem 2 follow the
/// printed values by default; pass overrides when exploring the swapped
/// ordering.
pub fn make_test_problem(id: usize) -> Result<PoissonProblem> {
    make_test_problem_with(id, None)
}

pub fn make_test_problem_with(id: usize, lobe: Option<(f64, f64)>) -> Result<PoissonProblem> {
    let weights =
        LossWeights { lambda_omega: 1.0, lambda_gamma_e: 100.0, lambda_gamma_i: 1.0 };
    let problem = match id {
        1 => {
            // Circle embedded in a square. The printed solution lacks the
            // particular term D rho^k sin(n omega) whose Laplacian is the
            // printed source; with it restored, the source and the Neumann
            // data h = 1 hold exactly and the Dirichlet trace is u itself.
            let k = 1.0f64;
            let n = -5.0f64;
            let d = (2.0f64).sqrt().powf(-k.max(n));
            let r_circle = 0.5f64;
            let exact = ExactSolution::new(move |x, y| {
                let rho = (x * x + y * y).sqrt();
                let omega = Jet2::atan2(y, x);
                let sin_n = (omega * n).sin();
                let particular = rho.powi(k as i32) * sin_n * d;
                let harmonic =
                    (rho * (1.0 / r_circle)).powi((n - k) as i32) * rho.powi(k as i32) * sin_n
                        * (-d * k / n);
                particular + harmonic + rho.ln() * r_circle
            });
            let source = move |z: &[f64; 2]| {
                let rho = (z[0] * z[0] + z[1] * z[1]).sqrt();
                let omega = z[1].atan2(z[0]);
                d * (k * k - n * n) * rho.powf(k - 2.0) * (n * omega).sin()
            };
            let g = move |z: &[f64; 2]| {
                let rho = (z[0] * z[0] + z[1] * z[1]).sqrt();
                let omega = z[1].atan2(z[0]);
                let sin_n = (n * omega).sin();
                d * rho.powf(k) * sin_n
                    - (d * k / n) * (rho / r_circle).powf(n - k) * rho.powf(k) * sin_n
                    + r_circle * rho.ln()
            };
            PoissonProblem {
                name: "test1".into(),
                geometry: Geometry::square_with_circle(),
                source: Arc::new(source),
                external_bc: BoundaryCondition::dirichlet(Arc::new(g)),
                internal_bc: BoundaryCondition::neumann(Arc::new(|_: &[f64; 2]| 1.0)),
                weights,
                exact: Some(exact),
            }
        }
        2 => {
            // Four-lobe structure. The printed source has typos (a constant
            // exponent and missing exponential factors); it is derived here
            // as the Laplacian of the printed solution, which reproduces the
            // printed leading term 12(10 rho^2 - 1) exp(-10 rho^2).
            let (r_m, r_d) = lobe.unwrap_or((0.0305, 0.117));
            let centers = [(0.45, 0.45), (0.45, -0.45), (-0.45, 0.45), (-0.45, -0.45)];
            let exact = ExactSolution::new(move |x, y| {
                let lx = x + (-0.5);
                let ly = y + (-0.5);
                let mut u = (-(lx * lx + ly * ly) * 10.0).exp() * 0.3;
                for (cx, cy) in centers {
                    let dx = lx + cx;
                    let dy = ly + cy;
                    u = u + (-(dx * dx + dy * dy) * 10.0).exp();
                }
                u
            });
            let source = move |z: &[f64; 2]| {
                let lx = z[0] - 0.5;
                let ly = z[1] - 0.5;
                let rho2 = lx * lx + ly * ly;
                let mut r = 12.0 * (10.0 * rho2 - 1.0) * (-10.0 * rho2).exp();
                for (cx, cy) in centers {
                    let rk2 = (lx + cx) * (lx + cx) + (ly + cy) * (ly + cy);
                    r += 40.0 * (10.0 * rk2 - 1.0) * (-10.0 * rk2).exp();
                }
                r
            };
            let g = move |z: &[f64; 2]| {
                let lx = z[0] - 0.5;
                let ly = z[1] - 0.5;
                let mut u = 0.3 * (-10.0 * (lx * lx + ly * ly)).exp();
                for (cx, cy) in centers {
                    let rk2 = (lx + cx) * (lx + cx) + (ly + cy) * (ly + cy);
                    u += (-10.0 * rk2).exp();
                }
                u
            };
            PoissonProblem {
                name: "test2".into(),
                geometry: Geometry::four_lobe(r_m, r_d),
                source: Arc::new(source),
                external_bc: BoundaryCondition::dirichlet(Arc::new(g)),
                internal_bc: BoundaryCondition::dirichlet(Arc::new(g)),
                weights,
                exact: Some(exact),
            }
        }
        3 => {
            // Annulus with homogeneous source: u = R_i log(rho / R_o).
            let (r_i, r_o) = (0.25f64, 0.75f64);
            let exact =
                ExactSolution::new(move |x, y| (x * x + y * y).sqrt().ln() * r_i + Jet2::constant(-r_i * r_o.ln()));
            PoissonProblem {
                name: "test3".into(),
                geometry: Geometry::annulus(),
                source: Arc::new(|_: &[f64; 2]| 0.0),
                external_bc: BoundaryCondition::dirichlet(Arc::new(|_: &[f64; 2]| 0.0)),
                internal_bc: BoundaryCondition::neumann(Arc::new(|_: &[f64; 2]| 1.0)),
                weights,
                exact: Some(exact),
            }
        }
        4 => {
            // Annulus with unit source:
            // u = (rho^2 - R_o^2)/4 + R_i (1 - R_i/2) log(rho / R_o).
            let (r_i, r_o) = (0.25f64, 0.75f64);
            let log_coef = r_i * (1.0 - r_i / 2.0);
            let exact = ExactSolution::new(move |x, y| {
                let rho2 = x * x + y * y;
                (rho2 + (-r_o * r_o)) * 0.25 + rho2.sqrt().ln() * log_coef
                    + Jet2::constant(-log_coef * r_o.ln())
            });
            PoissonProblem {
                name: "test4".into(),
                geometry: Geometry::annulus(),
                source: Arc::new(|_: &[f64; 2]| 1.0),
                external_bc: BoundaryCondition::dirichlet(Arc::new(|_: &[f64; 2]| 0.0)),
                internal_bc: BoundaryCondition::neumann(Arc::new(|_: &[f64; 2]| 1.0)),
                weights,
                exact: Some(exact),
            }
        }
        other => return Err(Error::UnknownProblem(other)),
    };
    problem.self_consistency_check(1000, 1e-8, Seed(0xC0FFEE))?;
    Ok(problem)
}

impl PoissonProblem {
    /// Verifies that the exact solution satisfies the PDE and both boundary
    /// conditions. Residuals are measured against 1 + |data| so oscillatory
    /// sources with large magnitudes are not judged more leniently than
    /// vanishing boundary data.
    pub fn self_consistency_check(&self, n_points: usize, tol: f64, seed: Seed) -> Result<()> {
        let Some(exact) = &self.exact else { return Ok(()) };
        let mut rng = seed.rng();
        let bbox = self.geometry.bounding_box();
        let mut checked = 0usize;
        let mut attempts = 0usize;
        while checked < n_points {
            attempts += 1;
            if attempts > 1000 * n_points {
                return Err(Error::DegenerateGeometry { accepted: checked, drawn: attempts });
            }
            let z = [
                rng.random_range(bbox[0].0..bbox[0].1),
                rng.random_range(bbox[1].0..bbox[1].1),
            ];
            if !self.geometry.is_interior(&z) {
                continue;
            }
            checked += 1;
            let r = (self.source)(&z);
            let lap = exact.laplacian(&z);
            if (lap - r).abs() > tol * (1.0 + r.abs()) {
                return Err(Error::SelfConsistency {
                    context: "interior",
                    residual: (lap - r).abs(),
                    x: z[0],
                    y: z[1],
                });
            }
        }
        for (which, bc, context) in [
            (BoundaryId::External, &self.external_bc, "external boundary"),
            (BoundaryId::Internal, &self.internal_bc, "internal boundary"),
        ] {
            for _ in 0..n_points / 2 {
                let t: f64 = rng.random();
                let bp = self.geometry.boundary_point(which, t);
                let u = exact.value(&bp.z);
                let grad = exact.gradient(&bp.z);
                let dn = grad[0] * bp.normal[0] + grad[1] * bp.normal[1];
                let data = (bc.data)(&[bp.z[0], bp.z[1]]);
                let residual = bc.value_coef * u + bc.normal_coef * dn - data;
                if residual.abs() > tol * (1.0 + data.abs()) {
                    return Err(Error::SelfConsistency {
                        context,
                        residual: residual.abs(),
                        x: bp.z[0],
                        y: bp.z[1],
                    });
                }
            }
        }
        Ok(())
    }
}
