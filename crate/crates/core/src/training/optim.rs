use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

/// Adam hyperparameters plus the schedule and clipping used by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip; non-positive disables clipping.
    pub clip_norm: f64,
    /// Cosine decay from `lr` to zero over the run.
    pub cosine_decay: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: 10.0,
            cosine_decay: true,
        }
    }
}

impl AdamConfig {
    /// Step size at `step` of `total` (0-based).
    pub fn learning_rate(&self, step: usize, total: usize) -> f64 {
        if !self.cosine_decay || total == 0 {
            return self.lr;
        }
        let t = step as f64 / total as f64;
        0.5 * self.lr * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Accepted steps so far.
    pub t: u64,
    pub rejected: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            rejected: 0,
        }
    }
}

/// One bias-corrected Adam update with step size `lr`. A gradient with any
/// non-finite entry is rejected: parameters and moments stay unchanged and
/// the rejection is counted. Returns whether the step was applied.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    hyper: &AdamConfig,
    lr: f64,
) -> Result<bool> {
    check_dim("Adam gradient", params.len(), grads.len())?;
    check_dim("Adam state", params.len(), state.m.len())?;
    if grads.iter().any(|g| !g.is_finite()) {
        state.rejected += 1;
        return Ok(false);
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        params[i] -= lr * mh / (vh.sqrt() + hyper.eps);
    }
    Ok(true)
}

/// Euclidean norm of the whole gradient.
pub fn global_norm(grads: &[f64]) -> f64 {
    grads.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescales `grads` in place so its global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}
