use std::f64::consts::PI;

/// Activation kinds used by the subnetworks.
///
/// `Sfm` is the soft Fourier mapping, which maps each pre-activation to a
/// relaxed (cos, sin) pair and therefore doubles the layer width. `S2Relu`
/// is the compactly supported wavelet-like activation
/// sin(2*pi*z) * ReLU(-(z-1)) * ReLU(z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Tanh,
    Sfm { relax: f64 },
    S2Relu,
    Identity,
}

impl Activation {
    /// SFM emits both cos and sin channels, doubling the effective width.
    pub fn output_multiplier(&self) -> usize {
        match self {
            Activation::Sfm { .. } => 2,
            _ => 1,
        }
    }

    /// Value and first three derivatives at `z` for single-channel
    /// activations. SFM is two-channel and handled by [`sfm_derivs`].
    pub fn derivs(&self, z: f64) -> Derivs {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let sech2 = 1.0 - t * t;
                Derivs {
                    f: t,
                    d1: sech2,
                    d2: -2.0 * t * sech2,
                    d3: 2.0 * sech2 * (3.0 * t * t - 1.0),
                }
            }
            Activation::S2Relu => s2relu_derivs(z),
            Activation::Identity => Derivs { f: z, d1: 1.0, d2: 0.0, d3: 0.0 },
            Activation::Sfm { .. } => panic!("SFM is two-channel; use sfm_derivs"),
        }
    }
}

/// Value and derivatives of a scalar activation at one pre-activation.
#[derive(Debug, Clone, Copy)]
pub struct Derivs {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// sin(2*pi*z) * ReLU(-(z-1)) * ReLU(z); zero outside (0, 1).
pub fn s2relu(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        (2.0 * PI * z).sin() * (1.0 - z) * z
    }
}

/// Derivatives of s2ReLU. At the kinks {0, 1} and outside the support the
/// derivatives are taken as zero, keeping gradients finite and deterministic.
pub fn s2relu_derivs(z: f64) -> Derivs {
    if z <= 0.0 || z >= 1.0 {
        return Derivs { f: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 };
    }
    let (s, c) = (2.0 * PI * z).sin_cos();
    let g = z - z * z;
    let g1 = 1.0 - 2.0 * z;
    let g2 = -2.0;
    // f = s*g with s = sin(2 pi z); repeated product rule in closed form.
    let two_pi = 2.0 * PI;
    Derivs {
        f: s * g,
        d1: two_pi * c * g + s * g1,
        d2: (g2 - two_pi * two_pi * g) * s + 2.0 * two_pi * g1 * c,
        d3: -3.0 * two_pi * two_pi * g1 * s + (3.0 * two_pi * g2 - two_pi.powi(3) * g) * c,
    }
}

/// Soft Fourier mapping gamma(z) = s * (cos z, sin z).
pub fn sfm(z: f64, s: f64) -> (f64, f64) {
    let (sin, cos) = z.sin_cos();
    (s * cos, s * sin)
}

/// Derivatives of both SFM channels at one pre-activation.
pub fn sfm_derivs(z: f64, s: f64) -> (Derivs, Derivs) {
    let (sin, cos) = z.sin_cos();
    let cos_channel = Derivs { f: s * cos, d1: -s * sin, d2: -s * cos, d3: s * sin };
    let sin_channel = Derivs { f: s * sin, d1: s * cos, d2: -s * sin, d3: -s * cos };
    (cos_channel, sin_channel)
}
