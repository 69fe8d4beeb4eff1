//! Block-aware optimizers: fixed-step gradient descent (the theory variant)
//! and Adam with exponential learning-rate decay and restarts (the practice
//! variant).
//!
//! Both operate on a designated block of the global parameter vector and
//! never touch coordinates outside it. The learning rate follows
//! lr0 * decay^e where e counts epochs globally across all blocks, so a
//! restart resets the moment estimates and the bias-correction counter but
//! keeps the decayed schedule.

use crate::error::{Error, Result};
use std::ops::Range;

/// Fixed-step gradient descent configuration.
#[derive(Debug, Clone, Copy)]
pub struct GdConfig {
    pub alpha: f64,
}

impl GdConfig {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0, "stepsize must be positive");
        Self { alpha }
    }
}

/// One fixed step x <- x - alpha * padded block gradient.
pub fn gd_step(params: &mut [f64], block: Range<usize>, block_gradient: &[f64], alpha: f64) {
    debug_assert_eq!(block.len(), block_gradient.len());
    for (p, g) in params[block].iter_mut().zip(block_gradient) {
        *p -= alpha * g;
    }
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr0: f64,
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr0: 2e-4, decay: 0.999_99, beta1: 0.9, beta2: 0.999, eps_hat: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr0 > 0.0
            && self.decay > 0.0
            && self.decay <= 1.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps_hat > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam configuration {self:?}")))
        }
    }
}

/// Learning rate after `global_epoch` epochs: lr0 * decay^e.
pub fn lr_at(cfg: &AdamConfig, global_epoch: u64) -> f64 {
    cfg.lr0 * cfg.decay.powf(global_epoch as f64)
}

/// Adam moments for the active block plus the step counters.
///
/// `t` is the local bias-correction counter, reset on restart; the global
/// epoch counter lives in the driver and is passed to each step so the
/// learning-rate schedule survives restarts.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(block_len: usize) -> Self {
        Self { m: vec![0.0; block_len], v: vec![0.0; block_len], t: 0 }
    }

    pub fn local_steps(&self) -> u64 {
        self.t
    }

    /// Zeroes the moments and the local counter; the decayed learning-rate
    /// schedule is untouched because it is driven by the global epoch.
    pub fn restart(&mut self, block_len: usize) {
        self.m.clear();
        self.m.resize(block_len, 0.0);
        self.v.clear();
        self.v.resize(block_len, 0.0);
        self.t = 0;
    }
}

/// One Adam step on the block at the given global epoch. Returns the
/// learning rate that was applied.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [f64],
    block: Range<usize>,
    block_gradient: &[f64],
    cfg: &AdamConfig,
    global_epoch: u64,
) -> Result<f64> {
    if state.m.len() != block.len() || block_gradient.len() != block.len() {
        return Err(Error::DimensionMismatch {
            expected: block.len(),
            got: block_gradient.len(),
            context: "adam state / gradient sized to the active block",
        });
    }
    if block_gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { epoch: global_epoch as usize });
    }
    let lr = lr_at(cfg, global_epoch);
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    let target = &mut params[block];
    for i in 0..target.len() {
        let g = block_gradient[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        target[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps_hat);
    }
    Ok(lr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gd_zero_gradient_is_identity() {
        let mut x = vec![1.0, 2.0, 3.0];
        gd_step(&mut x, 0..3, &[0.0, 0.0, 0.0], 0.5);
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn gd_scalar_quadratic_halves() {
        // f = x^2/2, gradient x, alpha 0.5: x goes 1 -> 0.5.
        let mut x = vec![1.0];
        gd_step(&mut x, 0..1, &[1.0], 0.5);
        assert_eq!(x, vec![0.5]);
    }

    #[test]
    fn gd_leaves_outside_coordinates_bit_identical() {
        let mut x = vec![0.1, 0.2, 0.3, 0.4];
        let before = x.clone();
        gd_step(&mut x, 1..3, &[5.0, -7.0], 0.1);
        assert_eq!(x[0].to_bits(), before[0].to_bits());
        assert_eq!(x[3].to_bits(), before[3].to_bits());
        assert_ne!(x[1], before[1]);
    }

    #[test]
    fn lr_schedule() {
        let cfg = AdamConfig::default();
        assert_eq!(lr_at(&cfg, 0), 2e-4);
        let lr1 = lr_at(&cfg, 1);
        assert!((lr1 - 2e-4 * 0.999_99).abs() < 1e-19, "{lr1}");
        let constant = AdamConfig { decay: 1.0, ..cfg };
        assert_eq!(lr_at(&constant, 12345), 2e-4);
        // Strictly decreasing when decay < 1.
        assert!(lr_at(&cfg, 10) < lr_at(&cfg, 9));
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(2);
        let mut x = vec![0.7, -0.3];
        adam_step(&mut state, &mut x, 0..2, &[0.0, 0.0], &cfg, 0).unwrap();
        assert_eq!(x, vec![0.7, -0.3]);
    }

    #[test]
    fn adam_first_step_is_almost_minus_lr() {
        // Bias corrections cancel at t = 1, so with gradient 1 the update is
        // -lr / (1 + eps_hat).
        let cfg = AdamConfig { lr0: 0.1, decay: 1.0, ..AdamConfig::default() };
        let mut state = AdamState::new(1);
        let mut x = vec![0.0];
        adam_step(&mut state, &mut x, 0..1, &[1.0], &cfg, 0).unwrap();
        let expected = -0.1 / (1.0 + cfg.eps_hat);
        assert!((x[0] - expected).abs() < 1e-15, "{} vs {expected}", x[0]);
    }

    #[test]
    fn identical_blocks_receive_identical_updates() {
        let cfg = AdamConfig::default();
        let mut s1 = AdamState::new(2);
        let mut s2 = AdamState::new(2);
        let mut x = vec![0.5, -0.5, 0.5, -0.5];
        for e in 0..10 {
            adam_step(&mut s1, &mut x, 0..2, &[0.3, -0.8], &cfg, e).unwrap();
            adam_step(&mut s2, &mut x, 2..4, &[0.3, -0.8], &cfg, e).unwrap();
        }
        assert_eq!(x[0], x[2]);
        assert_eq!(x[1], x[3]);
    }

    #[test]
    fn adam_respects_block_boundaries() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(2);
        let mut x = vec![1.0, 2.0, 3.0, 4.0];
        let before = x.clone();
        adam_step(&mut state, &mut x, 1..3, &[0.9, 0.9], &cfg, 3).unwrap();
        assert_eq!(x[0].to_bits(), before[0].to_bits());
        assert_eq!(x[3].to_bits(), before[3].to_bits());
    }

    #[test]
    fn restart_zeroes_moments_but_not_schedule() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(1);
        let mut x = vec![1.0];
        for e in 0..50 {
            adam_step(&mut state, &mut x, 0..1, &[0.2], &cfg, e).unwrap();
        }
        let lr_before = lr_at(&cfg, 50);
        state.restart(1);
        assert_eq!(state.local_steps(), 0);
        // Learning rate at the same global epoch is unchanged by the restart.
        assert_eq!(lr_at(&cfg, 50), lr_before);
        // A zero-gradient step right after restart keeps the parameters.
        let before = x[0];
        adam_step(&mut state, &mut x, 0..1, &[0.0], &cfg, 50).unwrap();
        assert_eq!(x[0], before);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(1);
        let mut x = vec![1.0];
        assert!(matches!(
            adam_step(&mut state, &mut x, 0..1, &[f64::NAN], &cfg, 7),
            Err(Error::NonFiniteGradient { epoch: 7 })
        ));
    }
}
