//! Differentiable feedforward subnetworks.
//!
//! A subnetwork maps a point z in R^d to a scalar. Besides plain evaluation
//! it provides exact input gradients, input Laplacians, and parameter
//! gradients of scalar losses assembled from those quantities. Derivatives
//! are propagated analytically (second-order forward jets through the
//! layers, with a reverse pass for parameter gradients); finite differences
//! appear only in tests.

mod activation;
mod autodiff;
mod params_io;

pub use activation::{s2relu, s2relu_derivs, sfm, sfm_derivs, Activation, Derivs};
pub use autodiff::{batch_loss_value, param_gradient, BatchLoss, JetTape, PointAdjoint, PointEval};
pub use params_io::{load_params, save_params};

use crate::error::{Error, Result};
use crate::numerics::{sample_normal_with, Seed};
use rand::Rng;

/// Flat parameter vector of one subnetwork.
///
/// Layout: per layer, weights row-major then biases; learnable input
/// scalings, when present, come last.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock(pub Vec<f64>);

impl ParamBlock {
    pub fn zeros(n: usize) -> Self {
        ParamBlock(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// How first-layer pre-activations are scaled.
#[derive(Debug, Clone, PartialEq)]
pub enum InputScaling {
    None,
    /// Fixed per-neuron scales. Vectors shorter (or longer) than the first
    /// hidden width are cycled to exactly that width at construction.
    Fixed(Vec<f64>),
    /// Scales drawn from N(0, init_std^2) at initialization and trained as
    /// part of the parameter block.
    Learnable { init_std: f64 },
}

/// Reusable buffers for [`SubNetwork::forward_with`].
#[derive(Debug, Default)]
pub struct ForwardScratch {
    current: Vec<f64>,
    pre: Vec<f64>,
}

/// Offsets of one layer's parameters inside the flat block.
#[derive(Debug, Clone, Copy)]
pub struct LayerLayout {
    pub weight_offset: usize,
    pub bias_offset: usize,
    /// Neuron count of this layer (rows of the weight matrix).
    pub width: usize,
    /// Effective input size (columns), doubled after an SFM layer.
    pub in_dim: usize,
}

/// One feedforward subnetwork with a scalar output.
#[derive(Debug, Clone)]
pub struct SubNetwork {
    input_dim: usize,
    hidden_widths: Vec<usize>,
    output_dim: usize,
    activations: Vec<Activation>,
    scaling: InputScaling,
    layout: Vec<LayerLayout>,
    scaling_offset: Option<usize>,
    param_count: usize,
}

impl SubNetwork {
    /// Builds a subnetwork. `activations` has one entry per layer including
    /// the output layer (normally `Identity` last).
    pub fn new(
        input_dim: usize,
        hidden_widths: Vec<usize>,
        output_dim: usize,
        activations: Vec<Activation>,
        scaling: InputScaling,
    ) -> Result<Self> {
        let n_layers = hidden_widths.len() + 1;
        if activations.len() != n_layers {
            return Err(Error::DimensionMismatch {
                expected: n_layers,
                got: activations.len(),
                context: "one activation per layer including the output layer",
            });
        }
        if matches!(activations.last(), Some(Activation::Sfm { .. })) {
            return Err(Error::Config("SFM on the output layer is not supported".into()));
        }
        let first_width = *hidden_widths.first().unwrap_or(&output_dim);
        let scaling = match scaling {
            InputScaling::Fixed(values) => {
                if values.is_empty() {
                    return Err(Error::Config("fixed input scaling needs at least one value".into()));
                }
                // Cycle the printed vectors to one scale per first-layer neuron.
                let cycled = (0..first_width).map(|i| values[i % values.len()]).collect();
                InputScaling::Fixed(cycled)
            }
            other => other,
        };

        let mut layout = Vec::with_capacity(n_layers);
        let mut offset = 0usize;
        let mut in_dim = input_dim;
        for j in 0..n_layers {
            let width = if j < hidden_widths.len() { hidden_widths[j] } else { output_dim };
            layout.push(LayerLayout {
                weight_offset: offset,
                bias_offset: offset + width * in_dim,
                width,
                in_dim,
            });
            offset += width * in_dim + width;
            in_dim = width * activations[j].output_multiplier();
        }
        let scaling_offset = match scaling {
            InputScaling::None => None,
            _ => {
                let o = offset;
                offset += first_width;
                Some(o)
            }
        };
        Ok(Self {
            input_dim,
            hidden_widths,
            output_dim,
            activations,
            scaling,
            layout,
            scaling_offset,
            param_count: offset,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden_widths
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn scaling(&self) -> &InputScaling {
        &self.scaling
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn layers(&self) -> &[LayerLayout] {
        &self.layout
    }

    pub fn scaling_offset(&self) -> Option<usize> {
        self.scaling_offset
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count {
            return Err(Error::DimensionMismatch {
                expected: self.param_count,
                got: params.len(),
                context: "parameter block length",
            });
        }
        Ok(())
    }

    pub(crate) fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: z.len(),
                context: "input point dimension",
            });
        }
        Ok(())
    }

    /// Per-neuron first-layer scales: the fixed vector, the learnable slice
    /// of `params`, or all ones.
    pub(crate) fn scales<'a>(&'a self, params: &'a [f64]) -> Option<&'a [f64]> {
        match &self.scaling {
            InputScaling::None => None,
            InputScaling::Fixed(values) => Some(values),
            InputScaling::Learnable { .. } => {
                let o = self.scaling_offset.expect("learnable scaling has an offset");
                Some(&params[o..o + self.layout[0].width])
            }
        }
    }

    /// Glorot-uniform weights, zero biases; learnable scalings drawn from
    /// the centred normal with the configured deviation.
    pub fn init_params(&self, seed: Seed) -> ParamBlock {
        let mut rng = seed.rng();
        self.init_params_with(&mut rng)
    }

    pub fn init_params_with<R: Rng>(&self, rng: &mut R) -> ParamBlock {
        let mut p = vec![0.0; self.param_count];
        for layer in &self.layout {
            let limit = (6.0 / (layer.in_dim + layer.width) as f64).sqrt();
            for w in &mut p[layer.weight_offset..layer.weight_offset + layer.width * layer.in_dim] {
                *w = rng.random_range(-limit..limit);
            }
            // Biases stay zero.
        }
        if let InputScaling::Learnable { init_std } = self.scaling {
            let o = self.scaling_offset.expect("learnable scaling has an offset");
            let width = self.layout[0].width;
            let draws = sample_normal_with(width, init_std, rng).expect("init_std validated");
            p[o..o + width].copy_from_slice(&draws);
        }
        ParamBlock(p)
    }

    /// Plain forward evaluation (no derivatives).
    pub fn forward(&self, params: &ParamBlock, z: &[f64]) -> Result<f64> {
        let mut scratch = ForwardScratch::default();
        self.forward_with(params, z, &mut scratch)
    }

    /// Forward evaluation reusing caller-owned buffers; the hot path for
    /// test-set sweeps.
    pub fn forward_with(
        &self,
        params: &ParamBlock,
        z: &[f64],
        scratch: &mut ForwardScratch,
    ) -> Result<f64> {
        self.check_params(&params.0)?;
        self.check_point(z)?;
        let p = &params.0;
        let ForwardScratch { current, pre } = scratch;
        current.clear();
        current.extend_from_slice(z);
        for (j, layer) in self.layout.iter().enumerate() {
            pre.clear();
            pre.resize(layer.width, 0.0);
            for i in 0..layer.width {
                let row = &p[layer.weight_offset + i * layer.in_dim
                    ..layer.weight_offset + (i + 1) * layer.in_dim];
                pre[i] = crate::numerics::dot(row, current);
            }
            if j == 0 {
                if let Some(scales) = self.scales(p) {
                    for i in 0..layer.width {
                        pre[i] *= scales[i];
                    }
                }
            }
            for i in 0..layer.width {
                pre[i] += p[layer.bias_offset + i];
            }
            match self.activations[j] {
                Activation::Sfm { relax } => {
                    current.clear();
                    current.resize(2 * layer.width, 0.0);
                    for i in 0..layer.width {
                        let (c, s) = sfm(pre[i], relax);
                        current[i] = c;
                        current[layer.width + i] = s;
                    }
                }
                act => {
                    current.clear();
                    current.extend(pre.iter().map(|&v| act.derivs(v).f));
                }
            }
        }
        Ok(current[0])
    }

    /// Exact gradient of `forward` with respect to the input point.
    pub fn input_gradient(&self, params: &ParamBlock, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(params, z)?.gradient)
    }

    /// Exact Laplacian of `forward` with respect to the input point.
    pub fn input_laplacian(&self, params: &ParamBlock, z: &[f64]) -> Result<f64> {
        Ok(self.eval(params, z)?.laplacian)
    }
}
