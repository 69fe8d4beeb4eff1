//! The multilevel block-coordinate descent driver.
//!
//! Two modes share the selection machinery:
//! - theory mode runs fixed-step gradient descent on a block-structured
//!   quadratic until the full gradient norm drops below epsilon, enforcing
//!   monotone descent and the worst-case iteration bound;
//! - practice mode (see [`crate::runner`]) follows a deterministic epoch
//!   schedule with Adam, restarting the optimizer at every block change.

use crate::error::{Error, Result};
use crate::galerkin::QuadraticProblem;
use crate::numerics::{dot, norm2, DenseMatrix};
use std::ops::Range;

/// How the next subproblem is picked from the block gradient norms.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionRule {
    /// Lowest block index with ||g_i|| > tau * ||g||; guaranteed to exist
    /// when tau < 1/sqrt(s).
    ThresholdFirst { tau: f64 },
    /// Block with the largest ||g_i|| (ties to the lowest index).
    MaxRatio,
    /// Deterministic cycling through the given block order.
    FixedCycle { order: Vec<usize> },
}

/// Picks a block. `cycle_position` counts sub-phase selections so far and
/// only matters for `FixedCycle`.
pub fn select_block(
    block_norms: &[f64],
    full_norm: f64,
    rule: &SelectionRule,
    cycle_position: usize,
) -> Result<usize> {
    match rule {
        SelectionRule::ThresholdFirst { tau } => {
            assert!((0.0..1.0).contains(tau), "tau must lie in (0,1)");
            block_norms
                .iter()
                .position(|&n| n > tau * full_norm)
                .ok_or_else(|| Error::NoQualifyingBlock { tau: *tau, norms: block_norms.to_vec() })
        }
        SelectionRule::MaxRatio => {
            let mut best = 0;
            for (i, &n) in block_norms.iter().enumerate() {
                if n > block_norms[best] {
                    best = i;
                }
            }
            Ok(best)
        }
        SelectionRule::FixedCycle { order } => {
            assert!(!order.is_empty(), "fixed cycle needs a non-empty order");
            Ok(order[cycle_position % order.len()])
        }
    }
}

/// When a subproblem minimization stops.
#[derive(Debug, Clone, Default)]
pub struct TerminationRule {
    pub max_subproblem_epochs: Option<usize>,
    /// Stop once the block gradient norm falls to this floor. The theory
    /// default is tau * eps.
    pub grad_floor: Option<f64>,
    /// Stop once the per-step objective decrease falls below this floor.
    pub loss_decrease_floor: Option<f64>,
}

impl TerminationRule {
    pub fn validate(&self) -> Result<()> {
        if self.max_subproblem_epochs.is_none()
            && self.grad_floor.is_none()
            && self.loss_decrease_floor.is_none()
        {
            return Err(Error::Config("termination rule needs at least one active criterion".into()));
        }
        Ok(())
    }
}

/// Deterministic epoch schedule for practice mode: an initial full-network
/// phase, then cycles of a full phase followed by a selected-block phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub initial_full_epochs: usize,
    pub cycles: usize,
    pub full_epochs_per_cycle: usize,
    pub sub_epochs_per_cycle: usize,
}

/// One row of the run trace. `active_block` is the trained block index, or
/// -1 for full-network epochs. `mse` is NaN when no exact solution applies
/// (quadratic theory runs).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub cost_units: f64,
    pub flops: u64,
    pub loss: f64,
    pub loss_interior: f64,
    pub loss_gamma_e: f64,
    pub loss_gamma_i: f64,
    pub mse: f64,
    pub active_block: i64,
    pub lr: f64,
}

/// Full trace of one run: per-epoch records plus the block gradient norms
/// at the epochs where a full gradient was evaluated.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    records: Vec<EpochRecord>,
    selections: Vec<(u64, Vec<f64>)>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: EpochRecord) {
        if let Some(last) = self.records.last() {
            assert!(record.epoch > last.epoch, "epochs must increase strictly");
            assert!(
                record.cost_units >= last.cost_units,
                "cost units must be non-decreasing"
            );
        }
        self.records.push(record);
    }

    /// Records the block norms seen at a full-gradient evaluation.
    pub fn push_selection(&mut self, epoch: u64, block_norms: Vec<f64>) {
        self.selections.push((epoch, block_norms));
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn selections(&self) -> &[(u64, Vec<f64>)] {
        &self.selections
    }

    pub fn final_cost_units(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cost_units)
    }
}

/// Quadratic objective 1/2 x^T Q x + c^T x over a block-partitioned vector.
#[derive(Debug, Clone)]
pub struct QuadraticBlockObjective {
    pub q: DenseMatrix,
    pub c: Vec<f64>,
    pub blocks: Vec<Range<usize>>,
}

impl QuadraticBlockObjective {
    /// Assembles the two-level problem F(x1 + P x2) over the stacked
    /// variable (x1, x2): Q = [[A, AP], [P^T A, P^T A P]], c = (b, P^T b).
    pub fn from_two_level(qp: &QuadraticProblem) -> Self {
        let n1 = qp.fine_dim();
        let n2 = qp.coarse_dim();
        let n = n1 + n2;
        let ap = qp.a.matmul(&qp.p);
        let ptap = qp.p.transpose().matmul(&ap);
        let mut q = DenseMatrix::zeros(n, n);
        for i in 0..n1 {
            for j in 0..n1 {
                q.set(i, j, qp.a.get(i, j));
            }
            for j in 0..n2 {
                q.set(i, n1 + j, ap.get(i, j));
                q.set(n1 + j, i, ap.get(i, j));
            }
        }
        for i in 0..n2 {
            for j in 0..n2 {
                q.set(n1 + i, n1 + j, ptap.get(i, j));
            }
        }
        let mut c = qp.b.clone();
        c.extend(qp.p.matvec_transposed(&qp.b));
        Self { q, c, blocks: vec![0..n1, n1..n] }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let qx = self.q.matvec(x);
        0.5 * dot(x, &qx) + dot(&self.c, x)
    }

    pub fn full_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.matvec(x);
        for (gi, ci) in g.iter_mut().zip(&self.c) {
            *gi += ci;
        }
        g
    }

    /// Largest eigenvalue of Q (the gradient's Lipschitz constant), by
    /// power iteration with a deterministic start.
    pub fn lipschitz_constant(&self) -> f64 {
        let n = self.dim();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) / n as f64).collect();
        for _ in 0..500 {
            let w = self.q.matvec(&v);
            let norm = norm2(&w);
            if norm == 0.0 {
                return 0.0;
            }
            v = w.iter().map(|x| x / norm).collect();
        }
        // Rayleigh quotient at the converged vector.
        let w = self.q.matvec(&v);
        dot(&v, &w) / dot(&v, &v)
    }
}

/// Iteration bound for fixed-step ML-BCD: ceil(2 (f0 - flow)/(alpha tau^2 eps^2) - 1).
pub fn complexity_bound(f0: f64, flow: f64, alpha: f64, tau: f64, eps: f64) -> u64 {
    assert!(f0 >= flow, "f0 must not be below flow");
    assert!(alpha > 0.0 && tau > 0.0 && eps > 0.0);
    let bound = 2.0 * (f0 - flow) / (alpha * tau * tau * eps * eps) - 1.0;
    bound.max(0.0).ceil() as u64
}

/// Settings for the fixed-step theory run.
#[derive(Debug, Clone)]
pub struct TheoryParams {
    pub alpha: f64,
    pub tau: f64,
    pub eps: f64,
    pub selection: SelectionRule,
    pub termination: TerminationRule,
    /// Hard cap on gradient-descent steps, a safety net for misconfigured
    /// stepsizes rather than part of the algorithm.
    pub iteration_cap: u64,
}

impl TheoryParams {
    pub fn new(alpha: f64, tau: f64, eps: f64) -> Self {
        Self {
            alpha,
            tau,
            eps,
            selection: SelectionRule::ThresholdFirst { tau },
            termination: TerminationRule {
                max_subproblem_epochs: None,
                grad_floor: Some(tau * eps),
                loss_decrease_floor: None,
            },
            iteration_cap: 50_000_000,
        }
    }
}

/// Outcome of a theory-mode run.
#[derive(Debug, Clone)]
pub struct TheoryOutcome {
    pub iterations: u64,
    pub major_iterations: u64,
    pub final_value: f64,
    pub final_grad_norm: f64,
    pub trace: RunTrace,
}

/// Fixed-step ML-BCD on a block quadratic: evaluate the full gradient, stop
/// once its norm reaches eps, otherwise select a block and run fixed-step
/// descent on it until the termination rule fires; repeat. Descent must be
/// monotone, which holds whenever alpha < 1/L.
pub fn run_theory(
    obj: &QuadraticBlockObjective,
    x0: &[f64],
    params: &TheoryParams,
) -> Result<TheoryOutcome> {
    assert!(params.eps > 0.0 && params.eps <= 1.0, "eps must lie in (0, 1]");
    params.termination.validate()?;
    let total_params: usize = obj.blocks.iter().map(|b| b.len()).sum();
    if x0.len() != obj.dim() || total_params != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len(),
            context: "theory-mode start vector / block partition",
        });
    }

    let mut x = x0.to_vec();
    let mut trace = RunTrace::new();
    let mut f = obj.value(&x);
    let mut iterations: u64 = 0;
    let mut major: u64 = 0;
    let mut cycle_position = 0usize;
    let mut cost = 0.0f64;

    loop {
        // Step 1: full gradient and termination test.
        let g = obj.full_gradient(&x);
        let block_norms: Vec<f64> =
            obj.blocks.iter().map(|b| norm2(&g[b.clone()])).collect();
        let full_norm = norm2(&g);
        major += 1;
        trace.push_selection(iterations, block_norms.clone());
        if full_norm <= params.eps {
            return Ok(TheoryOutcome {
                iterations,
                major_iterations: major,
                final_value: f,
                final_grad_norm: full_norm,
                trace,
            });
        }

        // Step 2: select a subproblem.
        let i = select_block(&block_norms, full_norm, &params.selection, cycle_position)?;
        cycle_position += 1;
        let block = obj.blocks[i].clone();
        let fraction = block.len() as f64 / obj.dim() as f64;

        // Step 3: fixed-step descent on the block until termination.
        let mut sub_epochs = 0usize;
        loop {
            let gi: Vec<f64> = {
                let g = obj.full_gradient(&x);
                g[block.clone()].to_vec()
            };
            let gi_norm = norm2(&gi);
            if let Some(floor) = params.termination.grad_floor {
                if gi_norm <= floor {
                    break;
                }
            }
            if let Some(cap) = params.termination.max_subproblem_epochs {
                if sub_epochs >= cap {
                    break;
                }
            }
            crate::optimizer::gd_step(&mut x, block.clone(), &gi, params.alpha);
            iterations += 1;
            sub_epochs += 1;
            let f_new = obj.value(&x);
            if !(f_new < f) {
                return Err(Error::Config(format!(
                    "descent violated at iteration {iterations}: {f_new} >= {f} \
                     (alpha too large for this problem?)"
                )));
            }
            if let Some(floor) = params.termination.loss_decrease_floor {
                if f - f_new < floor {
                    f = f_new;
                    break;
                }
            }
            f = f_new;
            cost += fraction;
            trace.push(EpochRecord {
                epoch: iterations,
                cost_units: cost,
                flops: 0,
                loss: f,
                loss_interior: 0.0,
                loss_gamma_e: 0.0,
                loss_gamma_i: 0.0,
                mse: f64::NAN,
                active_block: i as i64,
                lr: params.alpha,
            });
            if iterations >= params.iteration_cap {
                return Err(Error::Config(format!(
                    "iteration cap {} reached before ||g|| <= eps",
                    params.iteration_cap
                )));
            }
        }
    }
}
