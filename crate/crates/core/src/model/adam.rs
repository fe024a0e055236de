use serde::{Deserialize, Serialize};

use super::params::{Gradients, Parameters};
use super::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Parameters<T>,
    pub v: Parameters<T>,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &Parameters<T>, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// One Adam update with bias correction:
///
/// ```text
/// t ← t + 1
/// m ← β1 m + (1 − β1) g
/// v ← β2 v + (1 − β2) g²
/// θ ← θ − lr · (m / (1 − β1^t)) / (sqrt(v / (1 − β2^t)) + ε)
/// ```
pub fn adam_step<T: Real>(params: &mut Parameters<T>, grads: &Gradients<T>, state: &mut AdamState<T>) {
    debug_assert!(params.same_layout(grads));
    state.step += 1;
    let c = state.config;
    let t = state.step.min(i32::MAX as u64) as i32;
    let bc1 = T::from_f64(1.0 - c.beta1.powi(t));
    let bc2 = T::from_f64(1.0 - c.beta2.powi(t));
    let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
    let (one_m_b1, one_m_b2) = (T::from_f64(1.0 - c.beta1), T::from_f64(1.0 - c.beta2));
    let (lr, eps) = (T::from_f64(c.lr), T::from_f64(c.epsilon));

    let tensors = params
        .tensors_mut()
        .iter_mut()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().iter_mut().zip(state.v.tensors_mut().iter_mut()));
    for ((p, g), (m, v)) in tensors {
        for (((theta, &g), m), v) in p.data.iter_mut().zip(&g.data).zip(&mut m.data).zip(&mut v.data) {
            *m = b1 * *m + one_m_b1 * g;
            *v = b2 * *v + one_m_b2 * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
