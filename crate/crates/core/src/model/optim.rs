use serde::{Deserialize, Serialize};

use super::{HeadConfig, Linear, ModelError, ModelParams, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    /// Decoupled decay, applied to weights only.
    pub weight_decay: f64,
    pub betas: [f64; 2],
    pub eps: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            weight_decay: 0.01,
            betas: [0.9, 0.999],
            eps: 1e-8,
        }
    }
}

/// First and second moments, zero at step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(cfg: &HeadConfig) -> Self {
        Self {
            step: 0,
            m: ModelParams::zeros(cfg),
            v: ModelParams::zeros(cfg),
        }
    }
}

struct StepScalars<T> {
    lr: T,
    decay: T,
    b1: T,
    b2: T,
    c1: T,
    c2: T,
    eps: T,
}

fn update<T: Scalar>(theta: &mut [T], g: &[T], m: &mut [T], v: &mut [T], k: &StepScalars<T>, decay: bool) {
    let one = T::one();
    for i in 0..theta.len() {
        m[i] = k.b1 * m[i] + (one - k.b1) * g[i];
        v[i] = k.b2 * v[i] + (one - k.b2) * g[i] * g[i];
        let m_hat = m[i] / k.c1;
        let v_hat = v[i] / k.c2;
        let step = k.lr * (m_hat / (v_hat.sqrt() + k.eps));
        theta[i] = if decay { theta[i] * k.decay } else { theta[i] } - step;
    }
}

/// One AdamW update: `θ ← θ·(1 − lr·wd) − lr·m̂/(√v̂ + eps)`.
pub fn adamw_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState<T>,
    lr: f64,
    cfg: &OptimConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let k = StepScalars {
        lr: T::of(lr),
        decay: T::of(1.0 - lr * cfg.weight_decay),
        b1: T::of(cfg.betas[0]),
        b2: T::of(cfg.betas[1]),
        c1: T::of(1.0 - cfg.betas[0].powi(t)),
        c2: T::of(1.0 - cfg.betas[1].powi(t)),
        eps: T::of(cfg.eps),
    };
    let layers = params.layers_mut();
    let g: [&Linear<T>; 3] = [&grads.shared, &grads.style, &grads.attr];
    let m = state.m.layers_mut();
    let v = state.v.layers_mut();
    for (((p, g), m), v) in layers.into_iter().zip(g).zip(m).zip(v) {
        update(&mut p.weight, &g.weight, &mut m.weight, &mut v.weight, &k, true);
        update(&mut p.bias, &g.bias, &mut m.bias, &mut v.bias, &k, false);
    }
}

/// Cosine annealing from `lr_max` at step 0 to `lr_min` at `total_steps`.
/// Steps past the end stay at `lr_min`.
pub fn cosine_lr(step: usize, total_steps: usize, lr_max: f64, lr_min: f64) -> Result<f64, ModelError> {
    if total_steps == 0 {
        return Err(ModelError::ZeroSteps);
    }
    let frac = step.min(total_steps) as f64 / total_steps as f64;
    Ok(lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (std::f64::consts::PI * frac).cos()))
}
