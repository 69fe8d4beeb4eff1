//! Factory for the named experiment architectures: the hierarchical
//! two-block composites ML1-ML3, the single-level baselines SL1-SL2, the
//! four-subnet P-WWP composite and the Mscale composite.

use crate::composite::CompositeNetwork;
use crate::error::{Error, Result};
use crate::network::{Activation, InputScaling, SubNetwork};
use crate::numerics::Seed;

/// Description of one subnetwork: hidden widths, the first hidden layer's
/// activation, the activation of the remaining hidden layers, and the input
/// scaling. The output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct SubnetSpec {
    pub widths: Vec<usize>,
    pub first_activation: Activation,
    pub other_activation: Activation,
    pub scaling: InputScaling,
}

impl SubnetSpec {
    pub fn tanh(widths: Vec<usize>) -> Self {
        Self {
            widths,
            first_activation: Activation::Tanh,
            other_activation: Activation::Tanh,
            scaling: InputScaling::None,
        }
    }

    pub fn build(&self, input_dim: usize) -> Result<SubNetwork> {
        let mut activations = Vec::with_capacity(self.widths.len() + 1);
        for j in 0..self.widths.len() {
            activations.push(if j == 0 { self.first_activation } else { self.other_activation });
        }
        activations.push(Activation::Identity);
        SubNetwork::new(input_dim, self.widths.clone(), 1, activations, self.scaling.clone())
    }
}

/// A named or inline architecture with optional reference parameter counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSpec {
    pub name: String,
    pub input_dim: usize,
    pub subnets: Vec<SubnetSpec>,
    /// Published per-subnet counts; the constructed composite must match
    /// each within the bias-convention slack of one per subnet.
    pub expected_params: Option<Vec<usize>>,
}

impl ArchitectureSpec {
    pub fn build(&self) -> Result<CompositeNetwork> {
        let subnets: Result<Vec<SubNetwork>> =
            self.subnets.iter().map(|s| s.build(self.input_dim)).collect();
        let cn = CompositeNetwork::new(subnets?)?;
        if let Some(expected) = &self.expected_params {
            let slack = self.subnets.len();
            for (i, (&want, net)) in expected.iter().zip(cn.subnets()).enumerate() {
                let got = net.param_count();
                if got.abs_diff(want) > slack {
                    return Err(Error::Config(format!(
                        "architecture {}: subnet {i} has {got} parameters, expected {want} (+/-{slack})",
                        self.name
                    )));
                }
            }
        }
        Ok(cn)
    }
}

fn scale_range(from: f64, to: f64, step: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut x = from;
    while x <= to + 1e-9 {
        v.push(x);
        x += step;
    }
    v
}

/// The named architectures, full scale as published. Input dimension 2.
pub fn named(name: &str) -> Result<ArchitectureSpec> {
    let two_block = |coarse: usize, expected: Vec<usize>| ArchitectureSpec {
        name: name.to_string(),
        input_dim: 2,
        subnets: vec![
            SubnetSpec::tanh(vec![140, 140, 140]),
            SubnetSpec::tanh(vec![coarse, coarse, coarse]),
        ],
        expected_params: Some(expected),
    };
    let spec = match name {
        "ML1" => two_block(140, vec![40_040, 40_040]),
        "ML2" => two_block(100, vec![40_040, 20_600]),
        "ML3" => two_block(70, vec![40_040, 10_220]),
        "SL1" => ArchitectureSpec {
            name: name.into(),
            input_dim: 2,
            subnets: vec![SubnetSpec::tanh(vec![140, 140, 140])],
            expected_params: Some(vec![40_040]),
        },
        "SL2" => ArchitectureSpec {
            name: name.into(),
            input_dim: 2,
            subnets: vec![SubnetSpec::tanh(vec![200, 200, 200])],
            expected_params: Some(vec![81_200]),
        },
        "PWWP" => pwwp(100),
        "MSCALE" => mscale(100),
        other => return Err(Error::UnknownArchitecture(other.into())),
    };
    Ok(spec)
}

/// P-WWP with the given hidden width: a plain tanh block plus three blocks
/// with learnable normal input scalings of deviation 20, 40 and 60 behind
/// an SFM(0.5) first layer.
pub fn pwwp(width: usize) -> ArchitectureSpec {
    let mut subnets = vec![SubnetSpec::tanh(vec![width; 3])];
    for std in [20.0, 40.0, 60.0] {
        subnets.push(SubnetSpec {
            widths: vec![width; 3],
            first_activation: Activation::Sfm { relax: 0.5 },
            other_activation: Activation::Tanh,
            scaling: InputScaling::Learnable { init_std: std },
        });
    }
    ArchitectureSpec { name: "PWWP".into(), input_dim: 2, subnets, expected_params: None }
}

/// Mscale composite with the given hidden width: fixed scaling bands
/// (0.5..10 in halves, 11..30, 31..51, 51..70) cycled over the first layer,
/// SFM(1.0)/SFM(0.5) first activations, tanh in block 1 and s2ReLU in the
/// higher-frequency blocks.
pub fn mscale(width: usize) -> ArchitectureSpec {
    let bands = [
        scale_range(0.5, 10.0, 0.5),
        scale_range(11.0, 30.0, 1.0),
        scale_range(31.0, 51.0, 1.0),
        scale_range(51.0, 70.0, 1.0),
    ];
    let mut subnets = Vec::with_capacity(4);
    for (i, band) in bands.into_iter().enumerate() {
        subnets.push(SubnetSpec {
            widths: vec![width; 3],
            first_activation: Activation::Sfm { relax: if i == 0 { 1.0 } else { 0.5 } },
            other_activation: if i == 0 { Activation::Tanh } else { Activation::S2Relu },
            scaling: InputScaling::Fixed(band),
        });
    }
    ArchitectureSpec { name: "MSCALE".into(), input_dim: 2, subnets, expected_params: None }
}

/// Two-block tanh composite with arbitrary fine and coarse widths, the
/// downscaled hierarchical shape.
pub fn two_block_tanh(fine: usize, coarse: usize) -> ArchitectureSpec {
    ArchitectureSpec {
        name: format!("ML-{fine}-{coarse}"),
        input_dim: 2,
        subnets: vec![
            SubnetSpec::tanh(vec![fine; 3]),
            SubnetSpec::tanh(vec![coarse; 3]),
        ],
        expected_params: None,
    }
}

/// Single tanh block of the given width.
pub fn single_tanh(width: usize) -> ArchitectureSpec {
    ArchitectureSpec {
        name: format!("SL-{width}"),
        input_dim: 2,
        subnets: vec![SubnetSpec::tanh(vec![width; 3])],
        expected_params: None,
    }
}

/// Builds a named architecture and initializes its parameters.
pub fn build(name: &str, seed: Seed) -> Result<(CompositeNetwork, Vec<f64>)> {
    let cn = named(name)?.build()?;
    let params = cn.init_params(seed);
    Ok((cn, params))
}

pub const NAMED: [&str; 7] = ["ML1", "ML2", "ML3", "SL1", "SL2", "PWWP", "MSCALE"];
