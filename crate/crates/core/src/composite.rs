//! Sum-of-subnetworks model with block-structured parameters.
//!
//! The composite owns an ordered list of subnetworks; the global parameter
//! vector is their concatenation, and every optimizer in this crate works on
//! that vector through block masks.

use crate::error::{Error, Result};
use crate::network::{BatchLoss, ParamBlock, PointAdjoint, PointEval, SubNetwork};
use crate::numerics::Seed;
use std::ops::Range;

/// Ordered sum of subnetworks: y(x)(z) = sum_i y_i(x_i)(z).
#[derive(Debug, Clone)]
pub struct CompositeNetwork {
    subnets: Vec<SubNetwork>,
    offsets: Vec<usize>,
    total_params: usize,
}

/// Gradient of one block, both in its own coordinates and padded with zeros
/// to the length of the global vector.
#[derive(Debug, Clone)]
pub struct BlockGradient {
    pub block: usize,
    pub dense: Vec<f64>,
    pub range: Range<usize>,
}

impl BlockGradient {
    pub fn norm(&self) -> f64 {
        crate::numerics::norm2(&self.dense)
    }

    /// Zero-padded copy the size of the global parameter vector.
    pub fn padded(&self, total: usize) -> Vec<f64> {
        let mut out = vec![0.0; total];
        out[self.range.clone()].copy_from_slice(&self.dense);
        out
    }
}

/// Full-gradient evaluation split by block.
#[derive(Debug, Clone)]
pub struct BlockGradients {
    pub value: f64,
    pub blocks: Vec<BlockGradient>,
}

impl BlockGradients {
    pub fn block_norms(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.norm()).collect()
    }

    pub fn full_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.dense.iter().map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn concatenated(&self, total: usize) -> Vec<f64> {
        let mut out = vec![0.0; total];
        for b in &self.blocks {
            out[b.range.clone()].copy_from_slice(&b.dense);
        }
        out
    }
}

impl CompositeNetwork {
    pub fn new(subnets: Vec<SubNetwork>) -> Result<Self> {
        if subnets.is_empty() {
            return Err(Error::Config("composite needs at least one subnetwork".into()));
        }
        let dim = subnets[0].input_dim();
        if subnets.iter().any(|s| s.input_dim() != dim) {
            return Err(Error::Config("all subnetworks must share the input dimension".into()));
        }
        let mut offsets = Vec::with_capacity(subnets.len());
        let mut total = 0usize;
        for s in &subnets {
            offsets.push(total);
            total += s.param_count();
        }
        Ok(Self { subnets, offsets, total_params: total })
    }

    pub fn subnets(&self) -> &[SubNetwork] {
        &self.subnets
    }

    pub fn n_blocks(&self) -> usize {
        self.subnets.len()
    }

    pub fn input_dim(&self) -> usize {
        self.subnets[0].input_dim()
    }

    pub fn total_params(&self) -> usize {
        self.total_params
    }

    pub fn block_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i] + self.subnets[i].param_count()
    }

    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        (0..self.n_blocks()).map(|i| self.block_range(i)).collect()
    }

    /// Parameter-count fraction of block i, the per-epoch cost of training
    /// only that block in cost units.
    pub fn block_fraction(&self, i: usize) -> f64 {
        self.subnets[i].param_count() as f64 / self.total_params as f64
    }

    fn check_global(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.total_params {
            return Err(Error::DimensionMismatch {
                expected: self.total_params,
                got: params.len(),
                context: "global parameter vector length",
            });
        }
        Ok(())
    }

    /// Borrow block i of the global vector as a `ParamBlock` copy.
    fn block_params(&self, global: &[f64], i: usize) -> ParamBlock {
        ParamBlock(global[self.block_range(i)].to_vec())
    }

    /// Initializes all blocks: subnet i draws from stream i of the seed.
    pub fn init_params(&self, seed: Seed) -> Vec<f64> {
        let mut global = vec![0.0; self.total_params];
        for (i, net) in self.subnets.iter().enumerate() {
            let mut rng = seed.stream(i as u64);
            let block = net.init_params_with(&mut rng);
            global[self.block_range(i)].copy_from_slice(&block.0);
        }
        global
    }

    pub fn forward(&self, global: &[f64], z: &[f64]) -> Result<f64> {
        self.check_global(global)?;
        let mut sum = 0.0;
        for (i, net) in self.subnets.iter().enumerate() {
            sum += net.forward(&self.block_params(global, i), z)?;
        }
        Ok(sum)
    }

    /// Value, input gradient and Laplacian of the sum.
    pub fn eval(&self, global: &[f64], z: &[f64]) -> Result<PointEval> {
        self.check_global(global)?;
        let mut total = PointEval::zeros(self.input_dim());
        for (i, net) in self.subnets.iter().enumerate() {
            total.add_assign(&net.eval(&self.block_params(global, i), z)?);
        }
        Ok(total)
    }

    pub fn input_gradient(&self, global: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(global, z)?.gradient)
    }

    pub fn laplacian(&self, global: &[f64], z: &[f64]) -> Result<f64> {
        Ok(self.eval(global, z)?.laplacian)
    }

    /// Per-subnet evaluations at one point (used by the driver's cache).
    pub fn eval_per_subnet(&self, global: &[f64], z: &[f64]) -> Result<Vec<PointEval>> {
        self.check_global(global)?;
        self.subnets
            .iter()
            .enumerate()
            .map(|(i, net)| net.eval(&self.block_params(global, i), z))
            .collect()
    }

    /// Loss value and the gradient of every block at the loss's points.
    ///
    /// The concatenation of the block gradients is the full gradient, and
    /// the squared full norm is the sum of squared block norms.
    pub fn block_gradients(&self, global: &[f64], loss: &impl BatchLoss) -> Result<BlockGradients> {
        self.check_global(global)?;
        let points = loss.points();
        let block_params: Vec<ParamBlock> =
            (0..self.n_blocks()).map(|i| self.block_params(global, i)).collect();

        // Forward: per-point per-subnet evaluations plus tapes.
        let mut evals = Vec::with_capacity(points.len());
        let mut tapes = Vec::with_capacity(points.len());
        for z in points {
            let mut combined = PointEval::zeros(self.input_dim());
            let mut point_tapes = Vec::with_capacity(self.n_blocks());
            for (i, net) in self.subnets.iter().enumerate() {
                let (e, t) = net.eval_tape(&block_params[i], z)?;
                combined.add_assign(&e);
                point_tapes.push(t);
            }
            evals.push(combined);
            tapes.push(point_tapes);
        }

        let (value, adjoints) = loss.value_and_adjoints(&evals);

        // Reverse: because the composite output is a plain sum, the same
        // point adjoint feeds every subnet's backward pass.
        let mut blocks = Vec::with_capacity(self.n_blocks());
        for (i, net) in self.subnets.iter().enumerate() {
            let mut grad = vec![0.0; net.param_count()];
            for (point_tapes, adjoint) in tapes.iter().zip(&adjoints) {
                net.backprop(&block_params[i], &point_tapes[i], adjoint, &mut grad)?;
            }
            blocks.push(BlockGradient { block: i, dense: grad, range: self.block_range(i) });
        }
        Ok(BlockGradients { value, blocks })
    }
}

/// Mean-squared mismatch to target values at fixed points; the simplest
/// concrete [`BatchLoss`], used in tests and gradient checks.
pub struct ValueTargetLoss {
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl BatchLoss for ValueTargetLoss {
    fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn value_and_adjoints(&self, evals: &[PointEval]) -> (f64, Vec<PointAdjoint>) {
        let n = evals.len() as f64;
        let dim = self.points.first().map_or(0, |p| p.len());
        let mut total = 0.0;
        let mut adjoints = Vec::with_capacity(evals.len());
        for (e, t) in evals.iter().zip(&self.targets) {
            let r = e.value - t;
            total += r * r / n;
            adjoints.push(PointAdjoint::value_only(2.0 * r / n, dim));
        }
        (total, adjoints)
    }
}
