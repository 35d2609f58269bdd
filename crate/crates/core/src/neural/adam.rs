//! Parameter updates: Adam with bias correction, and plain SGD.

use ndarray::{Array1, Array2};

use super::{Gradients, MLPModel};

/// First/second moment accumulators, shaped like the model.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_weights: Vec<Array2<f64>>,
    v_weights: Vec<Array2<f64>>,
    m_biases: Vec<Array1<f64>>,
    v_biases: Vec<Array1<f64>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(model: &MLPModel) -> Self {
        Self {
            m_weights: model.weights().iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            v_weights: model.weights().iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            m_biases: model.biases().iter().map(|b| Array1::zeros(b.len())).collect(),
            v_biases: model.biases().iter().map(|b| Array1::zeros(b.len())).collect(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction; increments the step counter.
pub fn adam_step(model: &mut MLPModel, grads: &Gradients, state: &mut AdamState, lr: f64) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (beta1, beta2, eps) = (state.beta1, state.beta2, state.epsilon);

    let update = |param: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *param -= lr * m_hat / (v_hat.sqrt() + eps);
    };

    for l in 0..grads.weights.len() {
        let w = &mut model.weights_mut()[l];
        ndarray::Zip::from(w)
            .and(&grads.weights[l])
            .and(&mut state.m_weights[l])
            .and(&mut state.v_weights[l])
            .for_each(|p, &g, m, v| update(p, g, m, v));
        let b = &mut model.biases_mut()[l];
        ndarray::Zip::from(b)
            .and(&grads.biases[l])
            .and(&mut state.m_biases[l])
            .and(&mut state.v_biases[l])
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
}

/// One plain gradient-descent step.
pub fn sgd_step(model: &mut MLPModel, grads: &Gradients, lr: f64) {
    for l in 0..grads.weights.len() {
        let w = &mut model.weights_mut()[l];
        *w -= &(lr * &grads.weights[l]);
        let b = &mut model.biases_mut()[l];
        *b -= &(lr * &grads.biases[l]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Optimizer state tied to its kind; one `step` call per mini-batch.
#[derive(Debug, Clone)]
pub enum OptimizerState {
    Adam(AdamState),
    Sgd,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, model: &MLPModel) -> Self {
        match kind {
            OptimizerKind::Adam => OptimizerState::Adam(AdamState::new(model)),
            OptimizerKind::Sgd => OptimizerState::Sgd,
        }
    }

    pub fn step(&mut self, model: &mut MLPModel, grads: &Gradients, lr: f64) {
        match self {
            OptimizerState::Adam(state) => adam_step(model, grads, state, lr),
            OptimizerState::Sgd => sgd_step(model, grads, lr),
        }
    }
}
