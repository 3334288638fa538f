use std::collections::BTreeMap;

use super::params::ParamSet;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Bias-corrected Adam moments, keyed by parameter name.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: BTreeMap<String, Vec<f64>>,
    second: BTreeMap<String, Vec<f64>>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, name: &str) -> Option<&[f64]> {
        self.first.get(name).map(Vec::as_slice)
    }

    pub fn second_moment(&self, name: &str) -> Option<&[f64]> {
        self.second.get(name).map(Vec::as_slice)
    }
}

/// One Adam update of every parameter from its accumulated gradient.
/// A parameter without a gradient buffer is treated as having zero gradient.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (name, tensor) in params.iter_mut() {
        let n = tensor.numel();
        let m = state
            .first
            .entry(name.to_string())
            .or_insert_with(|| vec![0.0; n]);
        let v = state
            .second
            .entry(name.to_string())
            .or_insert_with(|| vec![0.0; n]);
        let grad = tensor.grad().map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        for (((p, g), mi), vi) in tensor
            .values_mut()
            .iter_mut()
            .zip(&grad)
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mi = state.beta1 * *mi + (1.0 - state.beta1) * g;
            *vi = state.beta2 * *vi + (1.0 - state.beta2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *p -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
}
