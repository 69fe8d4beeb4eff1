//! Forward jet propagation and the reverse pass.
//!
//! Each layer carries, per neuron, the value together with first and second
//! derivatives along every input axis (1 + 2d scalar components). One
//! forward pass therefore yields the output value, its input gradient and
//! its input Laplacian exactly. The reverse pass propagates adjoints of all
//! components back through the layers, producing exact parameter gradients
//! of any scalar loss assembled from values, input gradients and
//! Laplacians. Activations must expose third derivatives for this: the
//! Laplacian already consumes two, and its parameter gradient one more.

use super::{sfm_derivs, Activation, Derivs, ParamBlock, SubNetwork};
use crate::error::{Error, Result};

/// Value, input gradient and input Laplacian of one network at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub laplacian: f64,
}

impl PointEval {
    pub fn zeros(dim: usize) -> Self {
        Self { value: 0.0, gradient: vec![0.0; dim], laplacian: 0.0 }
    }

    /// Accumulates another evaluation; composite outputs are plain sums.
    pub fn add_assign(&mut self, other: &PointEval) {
        self.value += other.value;
        for (g, o) in self.gradient.iter_mut().zip(&other.gradient) {
            *g += o;
        }
        self.laplacian += other.laplacian;
    }
}

/// Partial derivatives of a scalar loss with respect to one [`PointEval`].
#[derive(Debug, Clone)]
pub struct PointAdjoint {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub laplacian: f64,
}

impl PointAdjoint {
    pub fn value_only(v: f64, dim: usize) -> Self {
        Self { value: v, gradient: vec![0.0; dim], laplacian: 0.0 }
    }
}

/// A scalar objective over a fixed set of evaluation points. The loss
/// supplies its own derivatives with respect to each point's value,
/// gradient and Laplacian; the network supplies the rest of the chain rule.
pub trait BatchLoss {
    fn points(&self) -> &[Vec<f64>];
    fn value_and_adjoints(&self, evals: &[PointEval]) -> (f64, Vec<PointAdjoint>);
}

/// Jet components of one layer, stored neuron-major: neuron i owns the
/// contiguous slice `[val, d1_0.., d2_0..]` of length `1 + 2*dirs`. The
/// layout keeps every per-neuron activation computation and every
/// weight-gradient dot product on adjacent memory.
#[derive(Debug, Clone)]
struct Jets {
    width: usize,
    dirs: usize,
    data: Vec<f64>,
}

impl Jets {
    fn zeros(width: usize, dirs: usize) -> Self {
        Self { width, dirs, data: vec![0.0; width * (1 + 2 * dirs)] }
    }

    #[inline]
    fn ncomp(&self) -> usize {
        1 + 2 * self.dirs
    }

    #[inline]
    fn jet(&self, i: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[i * nc..(i + 1) * nc]
    }

    #[inline]
    fn val(&self, i: usize) -> f64 {
        self.data[i * self.ncomp()]
    }

    /// Input jets for a point z: value z, unit first derivatives, zero
    /// curvature.
    fn seed(z: &[f64]) -> Self {
        let d = z.len();
        let mut jets = Jets::zeros(d, d);
        let nc = jets.ncomp();
        for (c, &zc) in z.iter().enumerate() {
            jets.data[c * nc] = zc;
            jets.data[c * nc + 1 + c] = 1.0;
        }
        jets
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// out_jet[k] += sum_c w[c] * in_jet(c)[k] for every component k.
    #[inline]
    fn accumulate_linear(out: &mut [f64], row: &[f64], input: &Jets) {
        let nc = out.len();
        for (&wv, src) in row.iter().zip(input.data.chunks_exact(nc)) {
            for (o, &s) in out.iter_mut().zip(src) {
                *o += wv * s;
            }
        }
    }
}

/// Cached forward jets of one evaluation, consumed by [`SubNetwork::backprop`].
#[derive(Debug, Clone)]
pub struct JetTape {
    z: Vec<f64>,
    /// W0 * z before scaling and bias; needed for learnable-scale adjoints.
    first_raw: Vec<f64>,
    pre: Vec<Jets>,
    post: Vec<Jets>,
}

impl SubNetwork {
    /// Forward jets for one point, keeping the tape for a later reverse pass.
    pub fn eval_tape(&self, params: &ParamBlock, z: &[f64]) -> Result<(PointEval, JetTape)> {
        self.check_params(&params.0)?;
        self.check_point(z)?;
        let p = &params.0;
        let d = self.input_dim();
        let nc = 1 + 2 * d;
        let input = Jets::seed(z);
        let mut pre = Vec::with_capacity(self.layers().len());
        let mut post = Vec::with_capacity(self.layers().len());
        let mut first_raw = Vec::new();

        for (j, layer) in self.layers().iter().enumerate() {
            let in_jets = if j == 0 { &input } else { &post[j - 1] };
            let mut pj = Jets::zeros(layer.width, d);
            for i in 0..layer.width {
                let row = &p[layer.weight_offset + i * layer.in_dim
                    ..layer.weight_offset + (i + 1) * layer.in_dim];
                let out = &mut pj.data[i * nc..(i + 1) * nc];
                Jets::accumulate_linear(out, row, in_jets);
            }
            if j == 0 {
                if let Some(scales) = self.scales(p) {
                    first_raw = (0..layer.width).map(|i| pj.val(i)).collect();
                    for i in 0..layer.width {
                        let s = scales[i];
                        for v in &mut pj.data[i * nc..(i + 1) * nc] {
                            *v *= s;
                        }
                    }
                }
            }
            for i in 0..layer.width {
                pj.data[i * nc] += p[layer.bias_offset + i];
            }
            if !pj.is_finite() {
                return Err(Error::NonFinite { context: "forward jets", layer: j });
            }
            let aj = apply_activation(&self.activations()[j], &pj);
            pre.push(pj);
            post.push(aj);
        }

        let out = post.last().expect("at least one layer");
        let out_jet = out.jet(0);
        let eval = PointEval {
            value: out_jet[0],
            gradient: out_jet[1..1 + d].to_vec(),
            laplacian: out_jet[1 + d..].iter().sum(),
        };
        Ok((eval, JetTape { z: z.to_vec(), first_raw, pre, post }))
    }

    /// Forward jets without keeping the tape.
    pub fn eval(&self, params: &ParamBlock, z: &[f64]) -> Result<PointEval> {
        self.eval_tape(params, z).map(|(e, _)| e)
    }

    /// Accumulates d(loss)/d(params) into `grad`, given the loss adjoint of
    /// this network's evaluation at the taped point.
    pub fn backprop(
        &self,
        params: &ParamBlock,
        tape: &JetTape,
        adjoint: &PointAdjoint,
        grad: &mut [f64],
    ) -> Result<()> {
        self.check_params(&params.0)?;
        self.check_params(grad)?;
        if self.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.output_dim(),
                context: "backprop assumes a scalar output",
            });
        }
        let p = &params.0;
        let d = self.input_dim();
        let nc = 1 + 2 * d;
        let n_layers = self.layers().len();

        // Seed the adjoint jets on the scalar output.
        let mut adj = Jets::zeros(1, d);
        adj.data[0] = adjoint.value;
        for k in 0..d {
            adj.data[1 + k] = adjoint.gradient[k];
            // The Laplacian is the sum over axes of second components, so
            // its adjoint fans out identically to every axis.
            adj.data[1 + d + k] = adjoint.laplacian;
        }

        for j in (0..n_layers).rev() {
            let layer = self.layers()[j];
            // Activation reverse: post-activation adjoints -> pre-activation.
            let pre_adj = reverse_activation(&self.activations()[j], &tape.pre[j], &adj);

            // Bias adjoints.
            for i in 0..layer.width {
                grad[layer.bias_offset + i] += pre_adj.val(i);
            }

            if j == 0 {
                if let Some(scales) = self.scales(p) {
                    // p = scale (.) raw (+ bias on the value row), with raw
                    // components (W z, W[:,k], 0).
                    let so = self.scaling_offset().expect("scaled layer has an offset");
                    let learnable = matches!(self.scaling(), super::InputScaling::Learnable { .. });
                    for i in 0..layer.width {
                        let aj_i = pre_adj.jet(i);
                        let w_row = layer.weight_offset + i * layer.in_dim;
                        let mut sbar = aj_i[0] * tape.first_raw[i];
                        for k in 0..d {
                            sbar += aj_i[1 + k] * p[w_row + k];
                        }
                        if learnable {
                            grad[so + i] += sbar;
                        }
                        // Weight adjoints through the scaled first layer:
                        // the value row contributes scale * z, the d1 row k
                        // contributes scale on column k only.
                        let sv = scales[i] * aj_i[0];
                        for c in 0..layer.in_dim {
                            grad[w_row + c] += sv * tape.z[c];
                        }
                        for k in 0..d {
                            grad[w_row + k] += scales[i] * aj_i[1 + k];
                        }
                    }
                } else {
                    for i in 0..layer.width {
                        let aj_i = pre_adj.jet(i);
                        let w_row = layer.weight_offset + i * layer.in_dim;
                        let av = aj_i[0];
                        for c in 0..layer.in_dim {
                            grad[w_row + c] += av * tape.z[c];
                        }
                        for k in 0..d {
                            grad[w_row + k] += aj_i[1 + k];
                        }
                    }
                }
                break;
            }

            // Weight adjoints: per entry, the dot of the two jets; and the
            // input adjoints via W transposed.
            let in_jets = &tape.post[j - 1];
            let mut next = Jets::zeros(layer.in_dim, d);
            for i in 0..layer.width {
                let aj_i = pre_adj.jet(i);
                let w_row = layer.weight_offset + i * layer.in_dim;
                let weights = &p[w_row..w_row + layer.in_dim];
                let grads = &mut grad[w_row..w_row + layer.in_dim];
                for (((&w, g), in_c), out_c) in weights
                    .iter()
                    .zip(grads.iter_mut())
                    .zip(in_jets.data.chunks_exact(nc))
                    .zip(next.data.chunks_exact_mut(nc))
                {
                    let mut wbar = 0.0;
                    for ((&a, &s), o) in aj_i.iter().zip(in_c).zip(out_c.iter_mut()) {
                        wbar += a * s;
                        *o += a * w;
                    }
                    *g += wbar;
                }
            }
            adj = next;
        }
        Ok(())
    }
}

fn apply_activation(act: &Activation, pre: &Jets) -> Jets {
    let w = pre.width;
    let d = pre.dirs;
    let nc = pre.ncomp();
    match act {
        Activation::Sfm { relax } => {
            let mut out = Jets::zeros(2 * w, d);
            for i in 0..w {
                let pj = pre.jet(i);
                let (cosd, sind) = sfm_derivs(pj[0], *relax);
                // cos channels first, then sin channels.
                for (ch, dv) in [(i, cosd), (w + i, sind)] {
                    let oj = &mut out.data[ch * nc..(ch + 1) * nc];
                    oj[0] = dv.f;
                    for k in 0..d {
                        let p1 = pj[1 + k];
                        let p2 = pj[1 + d + k];
                        oj[1 + k] = dv.d1 * p1;
                        oj[1 + d + k] = dv.d2 * p1 * p1 + dv.d1 * p2;
                    }
                }
            }
            out
        }
        act => {
            let mut out = Jets::zeros(w, d);
            for i in 0..w {
                let pj = pre.jet(i);
                let dv = act.derivs(pj[0]);
                let oj = &mut out.data[i * nc..(i + 1) * nc];
                oj[0] = dv.f;
                for k in 0..d {
                    let p1 = pj[1 + k];
                    let p2 = pj[1 + d + k];
                    oj[1 + k] = dv.d1 * p1;
                    oj[1 + d + k] = dv.d2 * p1 * p1 + dv.d1 * p2;
                }
            }
            out
        }
    }
}

/// Adjoints through an activation. With out = f(p) per component
///   out.val    = f(v)
///   out.d1[k]  = f'(v) p1k
///   out.d2[k]  = f''(v) p1k^2 + f'(v) p2k
/// the reverse accumulates into (v, p1k, p2k) adjoints, which brings in the
/// third derivative of f through the d2 rows.
fn reverse_activation(act: &Activation, pre: &Jets, out_adj: &Jets) -> Jets {
    let w = pre.width;
    let d = pre.dirs;
    let nc = pre.ncomp();
    let mut pre_adj = Jets::zeros(w, d);
    for i in 0..w {
        let pj = pre.jet(i);
        let channels: [(usize, super::Derivs); 2];
        let used: &[(usize, super::Derivs)] = match act {
            Activation::Sfm { relax } => {
                let (c, s) = sfm_derivs(pj[0], *relax);
                channels = [(i, c), (w + i, s)];
                &channels
            }
            act => {
                channels = [(i, act.derivs(pj[0])), (i, Derivs { f: 0.0, d1: 0.0, d2: 0.0, d3: 0.0 })];
                &channels[..1]
            }
        };
        let mut vbar = 0.0;
        let aj = &mut pre_adj.data[i * nc..(i + 1) * nc];
        for (ch, dv) in used {
            let oj = out_adj.jet(*ch);
            vbar += dv.d1 * oj[0];
            for k in 0..d {
                let p1 = pj[1 + k];
                let p2 = pj[1 + d + k];
                let a1 = oj[1 + k];
                let a2 = oj[1 + d + k];
                vbar += dv.d2 * p1 * a1 + (dv.d3 * p1 * p1 + dv.d2 * p2) * a2;
                aj[1 + k] += dv.d1 * a1 + 2.0 * dv.d2 * p1 * a2;
                aj[1 + d + k] += dv.d1 * a2;
            }
        }
        aj[0] = vbar;
    }
    pre_adj
}

/// Loss value and exact parameter gradient for one subnetwork.
pub fn param_gradient(
    net: &SubNetwork,
    params: &ParamBlock,
    loss: &impl BatchLoss,
) -> Result<(f64, Vec<f64>)> {
    let mut evals = Vec::with_capacity(loss.points().len());
    let mut tapes = Vec::with_capacity(loss.points().len());
    for z in loss.points() {
        let (e, t) = net.eval_tape(params, z)?;
        evals.push(e);
        tapes.push(t);
    }
    let (value, adjoints) = loss.value_and_adjoints(&evals);
    let mut grad = vec![0.0; net.param_count()];
    for (tape, adjoint) in tapes.iter().zip(&adjoints) {
        net.backprop(params, tape, adjoint, &mut grad)?;
    }
    Ok((value, grad))
}

/// Loss value only, used by the finite-difference oracles.
pub fn batch_loss_value(
    net: &SubNetwork,
    params: &ParamBlock,
    loss: &impl BatchLoss,
) -> Result<f64> {
    let evals: Result<Vec<PointEval>> =
        loss.points().iter().map(|z| net.eval(params, z)).collect();
    Ok(loss.value_and_adjoints(&evals?).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, InputScaling};
    use crate::numerics::Seed;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    /// The architectures exercised by every oracle below: plain tanh, SFM
    /// with learnable scaling, fixed-scaling s2ReLU, deep mixed.
    fn zoo() -> Vec<SubNetwork> {
        vec![
            SubNetwork::new(
                2,
                vec![6, 5],
                1,
                vec![Activation::Tanh, Activation::Tanh, Activation::Identity],
                InputScaling::None,
            )
            .unwrap(),
            SubNetwork::new(
                2,
                vec![5, 4],
                1,
                vec![
                    Activation::Sfm { relax: 0.5 },
                    Activation::Tanh,
                    Activation::Identity,
                ],
                InputScaling::Learnable { init_std: 2.0 },
            )
            .unwrap(),
            SubNetwork::new(
                2,
                vec![4, 4],
                1,
                vec![
                    Activation::Sfm { relax: 1.0 },
                    Activation::S2Relu,
                    Activation::Identity,
                ],
                InputScaling::Fixed(vec![0.5, 1.0, 1.5]),
            )
            .unwrap(),
            SubNetwork::new(
                3,
                vec![5, 4, 3],
                1,
                vec![
                    Activation::Tanh,
                    Activation::Sfm { relax: 0.7 },
                    Activation::Tanh,
                    Activation::Identity,
                ],
                InputScaling::None,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn linear_net_gradient_is_its_weights() {
        let net = SubNetwork::new(
            2,
            vec![],
            1,
            vec![Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        let p = ParamBlock(vec![1.0, 2.0, 0.3]);
        for z in [[0.0, 0.0], [1.5, -2.0]] {
            assert_eq!(net.input_gradient(&p, &z).unwrap(), vec![1.0, 2.0]);
            assert_eq!(net.input_laplacian(&p, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_params_tanh_net_has_zero_gradient() {
        let net = SubNetwork::new(
            2,
            vec![4],
            1,
            vec![Activation::Tanh, Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        let p = ParamBlock::zeros(net.param_count());
        assert_eq!(net.input_gradient(&p, &[0.4, 0.6]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn input_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for net in zoo() {
            let params = net.init_params(Seed(rng.random()));
            for _ in 0..5 {
                let z: Vec<f64> =
                    (0..net.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let grad = net.input_gradient(&params, &z).unwrap();
                let h = 1e-5;
                for k in 0..z.len() {
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[k] += h;
                    zm[k] -= h;
                    let fd = (net.forward(&params, &zp).unwrap()
                        - net.forward(&params, &zm).unwrap())
                        / (2.0 * h);
                    assert!(
                        rel_err(grad[k], fd) <= 1e-6,
                        "axis {k}: analytic {} vs fd {}",
                        grad[k],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn single_tanh_neuron_laplacian_in_closed_form() {
        // y = v * tanh(w . z + b): Laplacian = v * ||w||^2 * tanh''(w.z+b).
        let net = SubNetwork::new(
            2,
            vec![1],
            1,
            vec![Activation::Tanh, Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        let (w, b, v) = ([0.8, -0.6], 0.25, 1.7);
        let p = ParamBlock(vec![w[0], w[1], b, v, 0.0]);
        let z = [0.3, 0.9];
        let pre = w[0] * z[0] + w[1] * z[1] + b;
        let d2 = Activation::Tanh.derivs(pre).d2;
        let expected = v * (w[0] * w[0] + w[1] * w[1]) * d2;
        let got = net.input_laplacian(&p, &z).unwrap();
        assert!(rel_err(got, expected) < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn sfm_pair_builds_sum_of_cosines() {
        // First layer W = I, SFM(1.0) emits (cos z1, cos z2, sin z1, sin z2);
        // output weights (1,1,0,0) give y = cos z1 + cos z2 with
        // Laplacian -y, a hand-checkable curvature path.
        let net = SubNetwork::new(
            2,
            vec![2],
            1,
            vec![Activation::Sfm { relax: 1.0 }, Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        let p = ParamBlock(vec![
            1.0, 0.0, // w row 0
            0.0, 1.0, // w row 1
            0.0, 0.0, // biases
            1.0, 1.0, 0.0, 0.0, // output weights over (cos, cos, sin, sin)
            0.0, // output bias
        ]);
        let z = [0.3, -0.2];
        let value = net.forward(&p, &z).unwrap();
        let expected = z[0].cos() + z[1].cos();
        assert!((value - expected).abs() < 1e-15);
        let lap = net.input_laplacian(&p, &z).unwrap();
        assert!((lap + expected).abs() < 1e-15, "laplacian {lap} vs {}", -expected);
        let grad = net.input_gradient(&p, &z).unwrap();
        assert!((grad[0] + z[0].sin()).abs() < 1e-15);
        assert!((grad[1] + z[1].sin()).abs() < 1e-15);
    }

    #[test]
    fn laplacian_matches_second_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for net in zoo() {
            let params = net.init_params(Seed(rng.random()));
            for _ in 0..5 {
                let z: Vec<f64> =
                    (0..net.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let lap = net.input_laplacian(&params, &z).unwrap();
                let h = 1e-4;
                let f0 = net.forward(&params, &z).unwrap();
                let mut fd = 0.0;
                for k in 0..z.len() {
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[k] += h;
                    zm[k] -= h;
                    fd += (net.forward(&params, &zp).unwrap() - 2.0 * f0
                        + net.forward(&params, &zm).unwrap())
                        / (h * h);
                }
                assert!(
                    (lap - fd).abs() / lap.abs().max(fd.abs()).max(1e-3) <= 1e-5,
                    "laplacian {lap} vs fd {fd}"
                );
            }
        }
    }

    /// PINN-shaped loss: squared Laplacian residuals at interior points plus
    /// squared Robin residuals at boundary points.
    struct PinnLike {
        points: Vec<Vec<f64>>,
        n_interior: usize,
        sources: Vec<f64>,
        normals: Vec<Vec<f64>>,
        bc: (f64, f64),
        data: Vec<f64>,
    }

    impl BatchLoss for PinnLike {
        fn points(&self) -> &[Vec<f64>] {
            &self.points
        }

        fn value_and_adjoints(&self, evals: &[PointEval]) -> (f64, Vec<PointAdjoint>) {
            let dim = self.points[0].len();
            let ni = self.n_interior as f64;
            let nb = (self.points.len() - self.n_interior) as f64;
            let mut total = 0.0;
            let mut adjoints = Vec::with_capacity(evals.len());
            for (j, e) in evals.iter().enumerate() {
                if j < self.n_interior {
                    let r = e.laplacian - self.sources[j];
                    total += r * r / ni;
                    adjoints.push(PointAdjoint {
                        value: 0.0,
                        gradient: vec![0.0; dim],
                        laplacian: 2.0 * r / ni,
                    });
                } else {
                    let b = j - self.n_interior;
                    let (a, bcoef) = self.bc;
                    let normal = &self.normals[b];
                    let dn: f64 = e.gradient.iter().zip(normal).map(|(g, n)| g * n).sum();
                    let r = a * e.value + bcoef * dn - self.data[b];
                    total += r * r / nb;
                    adjoints.push(PointAdjoint {
                        value: 2.0 * r * a / nb,
                        gradient: normal.iter().map(|n| 2.0 * r * bcoef * n / nb).collect(),
                        laplacian: 0.0,
                    });
                }
            }
            (total, adjoints)
        }
    }

    fn pinn_like(dim: usize, rng: &mut ChaCha8Rng) -> PinnLike {
        let n_interior = 5;
        let n_boundary = 2;
        let mut points = Vec::new();
        for _ in 0..n_interior + n_boundary {
            points.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        let normals = (0..n_boundary)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = crate::numerics::norm2(&v);
                v.iter().map(|x| x / n).collect()
            })
            .collect();
        PinnLike {
            points,
            n_interior,
            sources: (0..n_interior).map(|_| rng.random_range(-1.0..1.0)).collect(),
            normals,
            bc: (1.0, 0.5),
            data: (0..n_boundary).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn param_gradient_matches_central_differences_per_parameter() {
        // The contract: central differences with step 1e-5 agree to 1e-5
        // relative error, parameter by parameter. (Directional probes are
        // avoided here because a joint perturbation can push an s2ReLU
        // pre-activation across its kink, where finite differences lie.)
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for (which, net) in zoo().into_iter().enumerate() {
            let params = net.init_params(Seed(rng.random()));
            let loss = pinn_like(net.input_dim(), &mut rng);
            let (_, grad) = param_gradient(&net, &params, &loss).unwrap();
            let h = 1e-5;
            for i in 0..net.param_count() {
                let mut pp = params.clone();
                let mut pm = params.clone();
                pp.0[i] += h;
                pm.0[i] -= h;
                let fd = (batch_loss_value(&net, &pp, &loss).unwrap()
                    - batch_loss_value(&net, &pm, &loss).unwrap())
                    / (2.0 * h);
                assert!(
                    (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-6) <= 1e-5,
                    "net {which} parameter {i}: analytic {} vs fd {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn constant_loss_gives_zero_gradient() {
        struct Constant;
        impl BatchLoss for Constant {
            fn points(&self) -> &[Vec<f64>] {
                &[]
            }
            fn value_and_adjoints(&self, _: &[PointEval]) -> (f64, Vec<PointAdjoint>) {
                (3.5, Vec::new())
            }
        }
        let net = SubNetwork::new(
            2,
            vec![3],
            1,
            vec![Activation::Tanh, Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        let params = net.init_params(Seed(4));
        let (v, g) = param_gradient(&net, &params, &Constant).unwrap();
        assert_eq!(v, 3.5);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_neuron_squared_value_hand_chain_rule() {
        // loss = y(z0)^2 with y = v tanh(w.z + b).
        let net = SubNetwork::new(
            2,
            vec![1],
            1,
            vec![Activation::Tanh, Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        let (w, b, v, c) = ([0.4, -1.1], 0.2, 0.9, -0.3);
        let params = ParamBlock(vec![w[0], w[1], b, v, c]);
        let z0 = vec![0.6, 0.5];
        struct Sq {
            points: Vec<Vec<f64>>,
        }
        impl BatchLoss for Sq {
            fn points(&self) -> &[Vec<f64>] {
                &self.points
            }
            fn value_and_adjoints(&self, evals: &[PointEval]) -> (f64, Vec<PointAdjoint>) {
                let y = evals[0].value;
                (y * y, vec![PointAdjoint::value_only(2.0 * y, 2)])
            }
        }
        let loss = Sq { points: vec![z0.clone()] };
        let (value, grad) = param_gradient(&net, &params, &loss).unwrap();
        let pre = w[0] * z0[0] + w[1] * z0[1] + b;
        let t = pre.tanh();
        let y = v * t + c;
        let sech2 = 1.0 - t * t;
        assert!((value - y * y).abs() < 1e-15);
        // d loss / d w_k = 2 y v sech2 z_k ; d/db = 2 y v sech2 ;
        // d/dv = 2 y t ; d/dc = 2 y.
        let expected = [
            2.0 * y * v * sech2 * z0[0],
            2.0 * y * v * sech2 * z0[1],
            2.0 * y * v * sech2,
            2.0 * y * t,
            2.0 * y,
        ];
        for (g, e) in grad.iter().zip(expected) {
            assert!(rel_err(*g, e) < 1e-13, "{g} vs {e}");
        }
    }

    #[test]
    fn neuron_relabeling_permutes_the_gradient() {
        // Swapping two first-layer neurons permutes the parameter block; the
        // gradient must follow the same permutation and the Laplacian must
        // not move at all.
        let net = SubNetwork::new(
            2,
            vec![3, 2],
            1,
            vec![Activation::Tanh, Activation::Tanh, Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        let params = net.init_params(Seed(13));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let loss = pinn_like(2, &mut rng);

        // Permutation swapping neurons 0 and 2 of the first hidden layer.
        let perm = |p: &ParamBlock| -> ParamBlock {
            let mut q = p.clone();
            let l0 = net.layers()[0];
            let l1 = net.layers()[1];
            for c in 0..l0.in_dim {
                q.0.swap(l0.weight_offset + c, l0.weight_offset + 2 * l0.in_dim + c);
            }
            q.0.swap(l0.bias_offset, l0.bias_offset + 2);
            for r in 0..l1.width {
                q.0.swap(l1.weight_offset + r * l1.in_dim, l1.weight_offset + r * l1.in_dim + 2);
            }
            q
        };

        let permuted = perm(&params);
        let z = [0.5, -0.4];
        let lap = net.input_laplacian(&params, &z).unwrap();
        let lap_p = net.input_laplacian(&permuted, &z).unwrap();
        assert!((lap - lap_p).abs() <= 1e-12 * lap.abs().max(1.0));

        let (v, g) = param_gradient(&net, &params, &loss).unwrap();
        let (v_p, g_p) = param_gradient(&net, &permuted, &loss).unwrap();
        assert!((v - v_p).abs() <= 1e-12 * v.abs().max(1.0));
        let g_unpermuted = perm(&ParamBlock(g_p)).0;
        for (a, b) in g.iter().zip(&g_unpermuted) {
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}
