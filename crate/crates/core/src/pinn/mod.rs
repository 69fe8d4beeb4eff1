//! Poisson problem definitions, the PINN loss and the MSE evaluator.
//!
//! A problem is the Laplace operator on one of the benchmark geometries
//! with Robin-type data a u + b du/dn on each boundary, loss weights and an
//! optional exact solution. The loss is the weighted mean-squared interior
//! residual plus one weighted mean-squared term per boundary.

mod geometry;
mod pool;
mod problems;

pub use geometry::{BoundaryId, BoundaryPoint, Geometry};
pub use pool::{draw_batch, sample_pool, Batch, SamplePool};
pub use problems::{make_hier_problem, make_test_problem, make_test_problem_with, ExactSolution};

use crate::composite::CompositeNetwork;
use crate::error::{Error, Result};
use crate::network::{BatchLoss, PointAdjoint, PointEval};
use std::sync::Arc;

pub type ScalarField = Arc<dyn Fn(&[f64; 2]) -> f64 + Send + Sync>;

/// Robin boundary condition a u + b du/dn = data, with the normal pointing
/// into the domain.
#[derive(Clone)]
pub struct BoundaryCondition {
    pub value_coef: f64,
    pub normal_coef: f64,
    pub data: ScalarField,
}

impl std::fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BoundaryCondition(a={}, b={})", self.value_coef, self.normal_coef)
    }
}

impl BoundaryCondition {
    pub fn new(value_coef: f64, normal_coef: f64, data: ScalarField) -> Result<Self> {
        if value_coef == 0.0 && normal_coef == 0.0 {
            return Err(Error::Config("boundary condition needs (a, b) != (0, 0)".into()));
        }
        Ok(Self { value_coef, normal_coef, data })
    }

    pub fn dirichlet(data: ScalarField) -> Self {
        Self { value_coef: 1.0, normal_coef: 0.0, data }
    }

    pub fn neumann(data: ScalarField) -> Self {
        Self { value_coef: 0.0, normal_coef: 1.0, data }
    }
}

/// Weights of the loss components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_omega: f64,
    pub lambda_gamma_e: f64,
    pub lambda_gamma_i: f64,
}

/// One Poisson benchmark problem.
#[derive(Clone)]
pub struct PoissonProblem {
    pub name: String,
    pub geometry: Geometry,
    pub source: ScalarField,
    pub external_bc: BoundaryCondition,
    pub internal_bc: BoundaryCondition,
    pub weights: LossWeights,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for PoissonProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonProblem")
            .field("name", &self.name)
            .field("geometry", &self.geometry)
            .field("weights", &self.weights)
            .finish_non_exhaustive()
    }
}

/// Weighted loss components; the total is exactly their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub interior: f64,
    pub gamma_e: f64,
    pub gamma_i: f64,
}

/// A concrete evaluation batch: interior points then external then internal
/// boundary points, with sources, data and normals precomputed.
pub struct PinnBatch {
    points: Vec<Vec<f64>>,
    n_interior: usize,
    n_external: usize,
    n_internal: usize,
    sources: Vec<f64>,
    normals: Vec<[f64; 2]>,
    data: Vec<f64>,
    external_bc: (f64, f64),
    internal_bc: (f64, f64),
    weights: LossWeights,
}

impl PinnBatch {
    pub fn new(
        problem: &PoissonProblem,
        interior: &[[f64; 2]],
        external: &[BoundaryPoint],
        internal: &[BoundaryPoint],
    ) -> Result<Self> {
        if interior.is_empty() {
            return Err(Error::Config("pinn loss needs a non-empty interior batch".into()));
        }
        let mut points = Vec::with_capacity(interior.len() + external.len() + internal.len());
        let mut sources = Vec::with_capacity(interior.len());
        for z in interior {
            points.push(z.to_vec());
            sources.push((problem.source)(z));
        }
        let mut normals = Vec::with_capacity(external.len() + internal.len());
        let mut data = Vec::with_capacity(external.len() + internal.len());
        for bp in external {
            points.push(bp.z.to_vec());
            normals.push(bp.normal);
            data.push((problem.external_bc.data)(&bp.z));
        }
        for bp in internal {
            points.push(bp.z.to_vec());
            normals.push(bp.normal);
            data.push((problem.internal_bc.data)(&bp.z));
        }
        Ok(Self {
            points,
            n_interior: interior.len(),
            n_external: external.len(),
            n_internal: internal.len(),
            sources,
            normals,
            data,
            external_bc: (problem.external_bc.value_coef, problem.external_bc.normal_coef),
            internal_bc: (problem.internal_bc.value_coef, problem.internal_bc.normal_coef),
            weights: problem.weights,
        })
    }

    /// Weighted components from per-point composite evaluations ordered as
    /// `points()`.
    pub fn components(&self, evals: &[PointEval]) -> LossBreakdown {
        let mut interior = 0.0;
        for j in 0..self.n_interior {
            let r = evals[j].laplacian - self.sources[j];
            interior += r * r;
        }
        interior *= self.weights.lambda_omega / self.n_interior as f64;

        let boundary_sum = |from: usize, count: usize, coefs: (f64, f64)| -> f64 {
            let mut sum = 0.0;
            for b in 0..count {
                let j = self.n_interior + from + b;
                let e = &evals[j];
                let n = &self.normals[from + b];
                let dn = e.gradient[0] * n[0] + e.gradient[1] * n[1];
                let r = coefs.0 * e.value + coefs.1 * dn - self.data[from + b];
                sum += r * r;
            }
            sum
        };
        let gamma_e = if self.n_external > 0 {
            self.weights.lambda_gamma_e * boundary_sum(0, self.n_external, self.external_bc)
                / self.n_external as f64
        } else {
            0.0
        };
        let gamma_i = if self.n_internal > 0 {
            self.weights.lambda_gamma_i
                * boundary_sum(self.n_external, self.n_internal, self.internal_bc)
                / self.n_internal as f64
        } else {
            0.0
        };
        LossBreakdown { total: interior + gamma_e + gamma_i, interior, gamma_e, gamma_i }
    }
}

impl BatchLoss for PinnBatch {
    fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn value_and_adjoints(&self, evals: &[PointEval]) -> (f64, Vec<PointAdjoint>) {
        let breakdown = self.components(evals);
        let mut adjoints = Vec::with_capacity(evals.len());
        let wi = self.weights.lambda_omega / self.n_interior as f64;
        for j in 0..self.n_interior {
            let r = evals[j].laplacian - self.sources[j];
            adjoints.push(PointAdjoint {
                value: 0.0,
                gradient: vec![0.0, 0.0],
                laplacian: 2.0 * wi * r,
            });
        }
        for b in 0..self.n_external + self.n_internal {
            let j = self.n_interior + b;
            let (coefs, w) = if b < self.n_external {
                (self.external_bc, self.weights.lambda_gamma_e / self.n_external as f64)
            } else {
                (self.internal_bc, self.weights.lambda_gamma_i / self.n_internal as f64)
            };
            let e = &evals[j];
            let n = &self.normals[b];
            let dn = e.gradient[0] * n[0] + e.gradient[1] * n[1];
            let r = coefs.0 * e.value + coefs.1 * dn - self.data[b];
            adjoints.push(PointAdjoint {
                value: 2.0 * w * r * coefs.0,
                gradient: vec![2.0 * w * r * coefs.1 * n[0], 2.0 * w * r * coefs.1 * n[1]],
                laplacian: 0.0,
            });
        }
        (breakdown.total, adjoints)
    }
}

/// PINN loss of a composite network on explicit batches.
pub fn pinn_loss(
    problem: &PoissonProblem,
    cn: &CompositeNetwork,
    global_params: &[f64],
    interior: &[[f64; 2]],
    external: &[BoundaryPoint],
    internal: &[BoundaryPoint],
) -> Result<LossBreakdown> {
    let batch = PinnBatch::new(problem, interior, external, internal)?;
    let evals: Result<Vec<PointEval>> =
        batch.points.iter().map(|z| cn.eval(global_params, z)).collect();
    Ok(batch.components(&evals?))
}

/// Mean squared error of the network against the exact solution on a test
/// set.
pub fn mse(
    cn: &CompositeNetwork,
    global_params: &[f64],
    test_points: &[[f64; 2]],
    exact: &ExactSolution,
) -> Result<f64> {
    let mut sum = 0.0;
    for z in test_points {
        let y = cn.forward(global_params, z)?;
        let e = y - exact.value(z);
        sum += e * e;
    }
    Ok(sum / test_points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, InputScaling, SubNetwork};
    use crate::numerics::Seed;

    fn linear_composite(w: [f64; 2], bias: f64) -> (CompositeNetwork, Vec<f64>) {
        let net =
            SubNetwork::new(2, vec![], 1, vec![Activation::Identity], InputScaling::None).unwrap();
        let cn = CompositeNetwork::new(vec![net]).unwrap();
        (cn, vec![w[0], w[1], bias])
    }

    /// Affine problem with exact solution u = x + 2y (harmonic), Dirichlet
    /// on both boundaries.
    fn affine_problem() -> PoissonProblem {
        let u = |z: &[f64; 2]| z[0] + 2.0 * z[1];
        let p = PoissonProblem {
            name: "affine".into(),
            geometry: Geometry::square_with_circle(),
            source: Arc::new(|_: &[f64; 2]| 0.0),
            external_bc: BoundaryCondition::dirichlet(Arc::new(u)),
            internal_bc: BoundaryCondition::dirichlet(Arc::new(u)),
            weights: LossWeights { lambda_omega: 1.0, lambda_gamma_e: 1.0, lambda_gamma_i: 1.0 },
            exact: Some(ExactSolution::new(|x, y| x + y * 2.0)),
        };
        p.self_consistency_check(200, 1e-10, Seed(3)).unwrap();
        p
    }

    fn some_batch(p: &PoissonProblem) -> (Vec<[f64; 2]>, Vec<BoundaryPoint>, Vec<BoundaryPoint>) {
        let interior = vec![[0.8, 0.1], [-0.7, 0.6], [0.6, -0.6]];
        let external: Vec<BoundaryPoint> =
            (0..4).map(|k| p.geometry.boundary_point(BoundaryId::External, k as f64 / 4.0 + 0.05)).collect();
        let internal: Vec<BoundaryPoint> =
            (0..4).map(|k| p.geometry.boundary_point(BoundaryId::Internal, k as f64 / 4.0)).collect();
        (interior, external, internal)
    }

    #[test]
    fn network_wired_to_exact_solution_has_zero_loss() {
        let p = affine_problem();
        let (cn, params) = linear_composite([1.0, 2.0], 0.0);
        let (interior, external, internal) = some_batch(&p);
        let loss = pinn_loss(&p, &cn, &params, &interior, &external, &internal).unwrap();
        assert!(loss.total <= 1e-28, "{loss:?}");
    }

    #[test]
    fn single_point_unit_source_linear_net() {
        // Linear net has zero Laplacian; with r = 1 and lambda = 1 the
        // interior component is (0 - 1)^2 = 1.
        let mut p = affine_problem();
        p.source = Arc::new(|_: &[f64; 2]| 1.0);
        let (cn, params) = linear_composite([1.0, 2.0], 0.0);
        let loss =
            pinn_loss(&p, &cn, &params, &[[0.9, 0.0]], &[], &[]).unwrap();
        assert_eq!(loss.interior, 1.0);
        assert_eq!(loss.total, 1.0);
    }

    #[test]
    fn doubling_a_weight_doubles_only_that_component() {
        let p = affine_problem();
        let (cn, params) = linear_composite([0.5, -0.25], 0.1);
        let (interior, external, internal) = some_batch(&p);
        let base = pinn_loss(&p, &cn, &params, &interior, &external, &internal).unwrap();
        let mut doubled = p.clone();
        doubled.weights.lambda_gamma_e *= 2.0;
        let loss2 = pinn_loss(&doubled, &cn, &params, &interior, &external, &internal).unwrap();
        assert_eq!(loss2.gamma_e, 2.0 * base.gamma_e);
        assert_eq!(loss2.interior, base.interior);
        assert_eq!(loss2.gamma_i, base.gamma_i);
        // Decomposition is exact.
        assert_eq!(loss2.total, loss2.interior + loss2.gamma_e + loss2.gamma_i);
    }

    #[test]
    fn mse_of_exact_network_is_zero_and_offset_squares() {
        let p = affine_problem();
        let exact = p.exact.as_ref().unwrap();
        let (cn, params) = linear_composite([1.0, 2.0], 0.0);
        let test: Vec<[f64; 2]> = vec![[0.9, 0.2], [-0.8, 0.7], [0.6, -0.9]];
        assert_eq!(mse(&cn, &params, &test, exact).unwrap(), 0.0);
        let (cn2, params2) = linear_composite([1.0, 2.0], 0.25);
        let got = mse(&cn2, &params2, &test, exact).unwrap();
        assert!((got - 0.0625).abs() <= 1e-15);
    }

    #[test]
    fn mse_matches_naive_summation() {
        let p = make_test_problem(3).unwrap();
        let exact = p.exact.as_ref().unwrap();
        let (cn, params) = linear_composite([0.3, -0.2], 0.05);
        let mut rng = Seed(5).rng();
        let test: Vec<[f64; 2]> = (0..50)
            .map(|_| loop {
                use rand::Rng;
                let z = [rng.random_range(-0.75..0.75), rng.random_range(-0.75..0.75)];
                if p.geometry.is_interior(&z) {
                    break z;
                }
            })
            .collect();
        let got = mse(&cn, &params, &test, exact).unwrap();
        let mut naive = 0.0;
        for z in &test {
            let y = params[0] * z[0] + params[1] * z[1] + params[2];
            naive += (y - exact.value(z)).powi(2);
        }
        naive /= test.len() as f64;
        assert!((got - naive).abs() <= 1e-14 * naive.max(1e-300));
    }

    #[test]
    fn neumann_sign_convention_via_test3() {
        // The exact solution of test problem 3 has du/dn = 1 on the inner
        // circle with the inward normal; a network wired to the exact
        // solution therefore zeroes the Neumann residual.
        let p = make_test_problem(3).unwrap();
        let exact = p.exact.as_ref().unwrap().clone();
        let internal: Vec<BoundaryPoint> =
            (0..8).map(|k| p.geometry.boundary_point(BoundaryId::Internal, k as f64 / 8.0)).collect();
        for bp in &internal {
            let g = exact.gradient(&bp.z);
            let dn = g[0] * bp.normal[0] + g[1] * bp.normal[1];
            let h = (p.internal_bc.data)(&bp.z);
            assert!((p.internal_bc.value_coef * exact.value(&bp.z) + p.internal_bc.normal_coef * dn - h).abs() <= 1e-12);
        }
    }
}
