//! Losses and backpropagation for both network heads.
//!
//! Softmax head: weighted sparse categorical cross-entropy, mean over the
//! batch. Linear head: mean squared Q-error over the taken actions only.

use ndarray::{Array1, Array2};

use crate::resample::ClassWeights;
use crate::table::ClassLabel;

use super::{MLPModel, NeuralError, OutputMode};

/// Per-parameter gradients, shaped like the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Mean over the batch of -w(label) * ln(p[label]).
pub fn loss_weighted_sce(
    probs: &Array2<f64>,
    labels: &[usize],
    weights: &ClassWeights,
) -> Result<f64, NeuralError> {
    if probs.nrows() != labels.len() {
        return Err(NeuralError::ShapeMismatch { expected: probs.nrows(), actual: labels.len() });
    }
    let mut total = 0.0;
    for (row, &label) in labels.iter().enumerate() {
        if label >= probs.ncols() {
            return Err(NeuralError::LabelOutOfRange { row, label });
        }
        let class = ClassLabel::from_code(label as i64)
            .ok_or(NeuralError::LabelOutOfRange { row, label })?;
        let p = probs[(row, label)].max(f64::MIN_POSITIVE);
        total -= weights.get(class) * p.ln();
    }
    Ok(total / labels.len() as f64)
}

/// Mean squared error between Q(s, a) of the taken actions and the targets.
pub fn q_loss(
    q_values: &Array2<f64>,
    actions: &[usize],
    targets: &[f64],
) -> Result<f64, NeuralError> {
    if q_values.nrows() != actions.len() || actions.len() != targets.len() {
        return Err(NeuralError::ShapeMismatch { expected: q_values.nrows(), actual: actions.len() });
    }
    let mut total = 0.0;
    for (row, (&a, &y)) in actions.iter().zip(targets).enumerate() {
        if a >= q_values.ncols() {
            return Err(NeuralError::LabelOutOfRange { row, label: a });
        }
        let d = q_values[(row, a)] - y;
        total += d * d;
    }
    Ok(total / actions.len() as f64)
}

/// Shared backward pass given the output-layer delta (dL/dz of the final
/// pre-activation).
fn backprop_from_delta(
    model: &MLPModel,
    trace: &super::ForwardTrace,
    mut delta: Array2<f64>,
    l2: f64,
) -> Gradients {
    let n_layers = model.weights().len();
    let mut g_weights: Vec<Array2<f64>> = vec![Array2::zeros((0, 0)); n_layers];
    let mut g_biases: Vec<Array1<f64>> = vec![Array1::zeros(0); n_layers];
    for l in (0..n_layers).rev() {
        let below: &Array2<f64> = if l == 0 { &trace.input } else { &trace.activations[l - 1] };
        let mut gw = delta.t().dot(below);
        if l2 > 0.0 {
            gw += &(2.0 * l2 * &model.weights()[l]);
        }
        g_weights[l] = gw;
        g_biases[l] = delta.sum_axis(ndarray::Axis(0));
        if l > 0 {
            let mut next = delta.dot(&model.weights()[l]);
            // ReLU gate: the stored activation is already max(0, z).
            ndarray::Zip::from(&mut next).and(&trace.activations[l - 1]).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = next;
        }
    }
    Gradients { weights: g_weights, biases: g_biases }
}

/// Gradients of the weighted cross-entropy (plus an optional L2 penalty
/// `l2 * sum ||W||^2`, biases excluded) for a softmax-head model.
pub fn backward_sce(
    model: &MLPModel,
    batch: &Array2<f64>,
    labels: &[usize],
    weights: &ClassWeights,
    l2: f64,
) -> Result<(f64, Gradients), NeuralError> {
    debug_assert_eq!(model.output_mode(), OutputMode::Softmax);
    if batch.nrows() != labels.len() {
        return Err(NeuralError::ShapeMismatch { expected: batch.nrows(), actual: labels.len() });
    }
    let trace = model.forward_trace(batch)?;
    let mut loss = loss_weighted_sce(&trace.output, labels, weights)?;
    if l2 > 0.0 {
        loss += l2 * model.weights().iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum::<f64>();
    }
    let n = batch.nrows() as f64;
    let mut delta = trace.output.clone();
    for (row, &label) in labels.iter().enumerate() {
        let class = ClassLabel::from_code(label as i64)
            .ok_or(NeuralError::LabelOutOfRange { row, label })?;
        let w = weights.get(class);
        for k in 0..delta.ncols() {
            let indicator = if k == label { 1.0 } else { 0.0 };
            delta[(row, k)] = w * (trace.output[(row, k)] - indicator) / n;
        }
    }
    Ok((loss, backprop_from_delta(model, &trace, delta, l2)))
}

/// Gradients of the mean squared Q-error for a linear-head model; only the
/// taken action's output contributes per row.
pub fn backward_q(
    model: &MLPModel,
    batch: &Array2<f64>,
    actions: &[usize],
    targets: &[f64],
) -> Result<(f64, Gradients), NeuralError> {
    debug_assert_eq!(model.output_mode(), OutputMode::Linear);
    let trace = model.forward_trace(batch)?;
    let loss = q_loss(&trace.output, actions, targets)?;
    let n = batch.nrows() as f64;
    let mut delta = Array2::zeros(trace.output.raw_dim());
    for (row, (&a, &y)) in actions.iter().zip(targets).enumerate() {
        delta[(row, a)] = 2.0 * (trace.output[(row, a)] - y) / n;
    }
    Ok((loss, backprop_from_delta(model, &trace, delta, 0.0)))
}
