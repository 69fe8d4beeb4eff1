//! Training pools: Latin hypercube interior sampling with rejection, LHS in
//! the boundary curve parameter, and without-replacement mini-batches.

use super::geometry::{BoundaryId, BoundaryPoint};
use super::PoissonProblem;
use crate::error::{Error, Result};
use crate::numerics::{lhs_sample_with, Seed};
use rand::Rng;

/// Fixed training pool of one run. Interior and test points lie strictly
/// inside the sampling region; boundary points sit on their curves.
#[derive(Debug, Clone)]
pub struct SamplePool {
    pub interior: Vec<[f64; 2]>,
    pub boundary_e: Vec<BoundaryPoint>,
    pub boundary_i: Vec<BoundaryPoint>,
    pub test: Vec<[f64; 2]>,
}

/// Index batch into a [`SamplePool`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub interior: Vec<usize>,
    pub boundary_e: Vec<usize>,
    pub boundary_i: Vec<usize>,
}

/// Rejection-samples `n` interior points: LHS over the bounding box, keep
/// what falls inside, redraw the remainder. The accepted count is exact;
/// stratification survives only marginally, which is the price of the
/// embedded holes.
fn interior_points<R: Rng>(
    problem: &PoissonProblem,
    n: usize,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    let bbox = problem.geometry.bounding_box();
    let mut accepted: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut drawn = 0usize;
    while accepted.len() < n {
        let want = n - accepted.len();
        let pts = lhs_sample_with(want, &bbox, rng)?;
        drawn += want;
        for p in pts {
            let z = [p[0], p[1]];
            if problem.geometry.is_interior(&z) {
                accepted.push(z);
            }
        }
        if drawn >= n && (accepted.len() as f64) < 0.01 * drawn as f64 {
            return Err(Error::DegenerateGeometry { accepted: accepted.len(), drawn });
        }
    }
    Ok(accepted)
}

fn boundary_points<R: Rng>(
    problem: &PoissonProblem,
    which: BoundaryId,
    n: usize,
    rng: &mut R,
) -> Result<Vec<BoundaryPoint>> {
    let params = lhs_sample_with(n, &[(0.0, 1.0)], rng)?;
    Ok(params.iter().map(|t| problem.geometry.boundary_point(which, t[0])).collect())
}

/// Builds the full pool from one seed. Interior, boundary and test draws
/// use separate derived streams so the pool is reproducible piecewise.
pub fn sample_pool(
    problem: &PoissonProblem,
    n_interior: usize,
    n_boundary: usize,
    n_test: usize,
    seed: Seed,
) -> Result<SamplePool> {
    assert!(n_interior >= 1 && n_boundary >= 1 && n_test >= 1, "pool counts must be positive");
    let mut rng = seed.stream(10);
    let interior = interior_points(problem, n_interior, &mut rng)?;
    let mut rng = seed.stream(11);
    let boundary_e = boundary_points(problem, BoundaryId::External, n_boundary, &mut rng)?;
    let mut rng = seed.stream(12);
    let boundary_i = boundary_points(problem, BoundaryId::Internal, n_boundary, &mut rng)?;
    let mut rng = seed.stream(13);
    let test = interior_points(problem, n_test, &mut rng)?;
    Ok(SamplePool { interior, boundary_e, boundary_i, test })
}

/// Uniform without-replacement index subsets, one per pool segment, drawn
/// from the caller's stream (advanced per epoch).
pub fn draw_batch<R: Rng>(
    pool: &SamplePool,
    n_interior: usize,
    n_boundary: usize,
    rng: &mut R,
) -> Result<Batch> {
    let pick = |len: usize, amount: usize, rng: &mut R| -> Result<Vec<usize>> {
        if amount > len {
            return Err(Error::OversizedBatch { requested: amount, available: len });
        }
        Ok(rand::seq::index::sample(rng, len, amount).into_vec())
    };
    Ok(Batch {
        interior: pick(pool.interior.len(), n_interior, rng)?,
        boundary_e: pick(pool.boundary_e.len(), n_boundary, rng)?,
        boundary_i: pick(pool.boundary_i.len(), n_boundary, rng)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinn::{make_hier_problem, make_test_problem};

    #[test]
    fn square_with_circle_pool_respects_membership() {
        let p = make_hier_problem(2, 4).unwrap();
        let pool = sample_pool(&p, 500, 100, 200, Seed(7)).unwrap();
        assert_eq!(pool.interior.len(), 500);
        for z in &pool.interior {
            assert!(z[0].abs() <= 1.0 && z[1].abs() <= 1.0);
            assert!(z[0] * z[0] + z[1] * z[1] >= 0.25);
        }
        for z in &pool.test {
            assert!(p.geometry.is_interior(z));
        }
    }

    #[test]
    fn annulus_boundary_points_sit_on_circles() {
        let p = make_test_problem(3).unwrap();
        let pool = sample_pool(&p, 100, 64, 50, Seed(3)).unwrap();
        for bp in &pool.boundary_e {
            let r = (bp.z[0] * bp.z[0] + bp.z[1] * bp.z[1]).sqrt();
            assert!((r - 0.75).abs() <= 1e-12);
        }
        for bp in &pool.boundary_i {
            let r = (bp.z[0] * bp.z[0] + bp.z[1] * bp.z[1]).sqrt();
            assert!((r - 0.25).abs() <= 1e-12);
        }
    }

    #[test]
    fn pool_replay_is_identical() {
        let p = make_test_problem(4).unwrap();
        let a = sample_pool(&p, 200, 40, 60, Seed(11)).unwrap();
        let b = sample_pool(&p, 200, 40, 60, Seed(11)).unwrap();
        assert_eq!(a.interior, b.interior);
        assert_eq!(a.boundary_e, b.boundary_e);
        assert_eq!(a.boundary_i, b.boundary_i);
        assert_eq!(a.test, b.test);
        let c = sample_pool(&p, 200, 40, 60, Seed(12)).unwrap();
        assert_ne!(a.interior, c.interior);
    }

    #[test]
    fn batches_are_subsets_and_vary_per_draw() {
        let p = make_test_problem(3).unwrap();
        let pool = sample_pool(&p, 100, 30, 20, Seed(2)).unwrap();
        let mut rng = Seed(2).stream(20);
        let b1 = draw_batch(&pool, 40, 10, &mut rng).unwrap();
        let b2 = draw_batch(&pool, 40, 10, &mut rng).unwrap();
        assert_ne!(b1, b2);
        assert!(b1.interior.iter().all(|&i| i < 100));
        assert!(b1.boundary_e.iter().all(|&i| i < 30));
        // Without replacement: no duplicate indices.
        let mut sorted = b1.interior.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 40);
        // Requesting the whole pool returns the whole pool.
        let full = draw_batch(&pool, 100, 30, &mut rng).unwrap();
        let mut idx = full.interior.clone();
        idx.sort_unstable();
        assert_eq!(idx, (0..100).collect::<Vec<_>>());
        // Oversized requests fail.
        assert!(matches!(
            draw_batch(&pool, 101, 10, &mut rng),
            Err(Error::OversizedBatch { .. })
        ));
    }
}
