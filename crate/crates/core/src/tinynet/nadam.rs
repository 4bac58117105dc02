//! NAdam: Adam with Nesterov momentum and the `0.96^(t * psi)` momentum
//! warm-up schedule, in the form used by the common deep-learning
//! frameworks.
//!
//! For step `t` (1-based):
//!
//! ```text
//! mu_t      = beta1 * (1 - 0.5 * 0.96^(t * psi))
//! m         = beta1 * m + (1 - beta1) * g
//! v         = beta2 * v + (1 - beta2) * g^2
//! denom     = sqrt(v / (1 - beta2^t)) + eps
//! theta    -= lr * (1 - mu_t) / (1 - prod_{i<=t} mu_i) * g / denom
//! theta    -= lr * mu_{t+1} / (1 - prod_{i<=t+1} mu_i) * m / denom
//! ```

use super::{Dense, MlpNet};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T = f64> {
    pub m: Vec<Dense<T>>,
    pub v: Vec<Dense<T>>,
    pub step: u64,
    /// Running product of the momentum schedule `mu_1 * ... * mu_t`.
    pub mu_product: f64,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(net: &MlpNet<T>) -> Self {
        let zeros = || {
            net.layers
                .iter()
                .map(|l| Dense::zeros(l.n_in, l.n_out))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
            mu_product: 1.0,
        }
    }
}

/// NAdam hyperparameters; a subset of the training config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub momentum_decay: f64,
}

impl Default for NadamParams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum_decay: 0.004,
        }
    }
}

fn momentum_at(beta1: f64, psi: f64, t: u64) -> f64 {
    beta1 * (1.0 - 0.5 * 0.96f64.powf(t as f64 * psi))
}

/// Applies one NAdam update to `net` in place and advances `state`.
pub fn nadam_step<T: Real>(
    state: &mut OptimizerState<T>,
    net: &mut MlpNet<T>,
    grads: &[Dense<T>],
    params: &NadamParams,
) {
    assert_eq!(grads.len(), net.layers.len(), "gradient layout must mirror the network");
    state.step += 1;
    let t = state.step;
    let mu = momentum_at(params.beta1, params.momentum_decay, t);
    let mu_next = momentum_at(params.beta1, params.momentum_decay, t + 1);
    state.mu_product *= mu;
    let mu_product_next = state.mu_product * mu_next;
    let bias2 = 1.0 - params.beta2.powf(t as f64);

    let lr = params.learning_rate;
    let coef_g = T::lit(lr * (1.0 - mu) / (1.0 - state.mu_product));
    let coef_m = T::lit(lr * mu_next / (1.0 - mu_product_next));
    let b1 = T::lit(params.beta1);
    let b2 = T::lit(params.beta2);
    let one_b1 = T::lit(1.0 - params.beta1);
    let one_b2 = T::lit(1.0 - params.beta2);
    let inv_bias2 = T::lit(1.0 / bias2);
    let eps = T::lit(params.epsilon);

    for (li, layer) in net.layers.iter_mut().enumerate() {
        let g = &grads[li];
        let m = &mut state.m[li];
        let v = &mut state.v[li];
        let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let denom = (*v * inv_bias2).sqrt() + eps;
            *p = *p - coef_g * g / denom - coef_m * *m / denom;
        };
        for k in 0..layer.w.len() {
            update(&mut layer.w[k], g.w[k], &mut m.w[k], &mut v.w[k]);
        }
        for k in 0..layer.b.len() {
            update(&mut layer.b[k], g.b[k], &mut m.b[k], &mut v.b[k]);
        }
    }
}
