//! Dense feedforward network with ReLU hidden layers, used both as the
//! supervised softmax classifier and (in linear output mode) as the
//! Q-network of the RL formulation. All parameters are f64; training is
//! bit-reproducible under a fixed seed.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::table::TableError;

mod adam;
mod backprop;
mod checkpoint;
mod encode;
mod train;

pub use adam::{adam_step, sgd_step, AdamState, OptimizerKind, OptimizerState};
pub use backprop::{backward_q, backward_sce, loss_weighted_sce, q_loss, Gradients};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use encode::{Encoder, NominalEncoding};
pub use train::{
    train_logreg, train_supervised, EpochStats, TrainConfig, TrainedClassifier, TrainingLog,
};

/// Output head of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    /// Rows of the forward pass are probability vectors.
    Softmax,
    /// Raw scores (Q-values).
    Linear,
}

/// Weight initialization scheme (uniform He or Glorot).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    HeUniform,
    GlorotUniform,
}

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("label {label} out of range at row {row}")]
    LabelOutOfRange { row: usize, label: usize },
    #[error("column `{column}` has missing cells; impute or drop before training")]
    MissingValues { column: String },
    #[error("network needs at least an input and an output layer")]
    TooFewLayers,
    #[error("checkpoint is not an MLP file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated or inconsistent")]
    MalformedCheckpoint,
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Feedforward network: `layer_sizes` = input, hidden..., output.
/// Weight `l` has shape (size_{l+1}, size_l).
#[derive(Debug, Clone)]
pub struct MLPModel {
    layer_sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    output_mode: OutputMode,
}

impl MLPModel {
    /// Random initialization: uniform He/Glorot weights, zero biases.
    pub fn new(
        layer_sizes: Vec<usize>,
        output_mode: OutputMode,
        init: InitScheme,
        seed: u64,
    ) -> Result<Self, NeuralError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(NeuralError::TooFewLayers);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let limit = match init {
                InitScheme::HeUniform => (6.0 / fan_in as f64).sqrt(),
                InitScheme::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-limit..limit));
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self { layer_sizes, weights, biases, output_mode })
    }

    /// Builds a model from explicit parameters (tests, checkpoints).
    pub fn from_parameters(
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        output_mode: OutputMode,
    ) -> Result<Self, NeuralError> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(NeuralError::TooFewLayers);
        }
        let mut layer_sizes = vec![weights[0].ncols()];
        for (w, b) in weights.iter().zip(&biases) {
            if w.nrows() != b.len() || w.ncols() != *layer_sizes.last().unwrap() {
                return Err(NeuralError::ShapeMismatch { expected: w.ncols(), actual: b.len() });
            }
            layer_sizes.push(w.nrows());
        }
        Ok(Self { layer_sizes, weights, biases, output_mode })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn output_mode(&self) -> OutputMode {
        self.output_mode
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    /// Switches the output head (used when a trained Q-network is read out
    /// through a softmax).
    pub fn with_output_mode(mut self, output_mode: OutputMode) -> Self {
        self.output_mode = output_mode;
        self
    }

    /// Forward pass over a batch (rows are samples).
    pub fn forward(&self, batch: &Array2<f64>) -> Result<Array2<f64>, NeuralError> {
        Ok(self.forward_trace(batch)?.output)
    }

    /// Forward pass keeping every layer's activations for backprop.
    pub(crate) fn forward_trace(&self, batch: &Array2<f64>) -> Result<ForwardTrace, NeuralError> {
        if batch.ncols() != self.input_size() {
            return Err(NeuralError::ShapeMismatch {
                expected: self.input_size(),
                actual: batch.ncols(),
            });
        }
        let n_layers = self.weights.len();
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
        let mut current = batch.clone();
        for l in 0..n_layers {
            let mut z = current.dot(&self.weights[l].t());
            z += &self.biases[l];
            if l + 1 < n_layers {
                z.mapv_inplace(|v| v.max(0.0));
                activations.push(z.clone());
                current = z;
            } else {
                let output = match self.output_mode {
                    OutputMode::Linear => z,
                    OutputMode::Softmax => softmax_rows(z),
                };
                return Ok(ForwardTrace { input: batch.clone(), activations, output });
            }
        }
        unreachable!("at least one layer")
    }

    /// Argmax per row; ties resolve toward the lower class code.
    pub fn predict_classes(&self, batch: &Array2<f64>) -> Result<Vec<usize>, NeuralError> {
        let out = self.forward(batch)?;
        Ok(argmax_rows(&out))
    }
}

/// Row-stable softmax.
pub fn softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    z
}

/// Argmax per row, ties toward the lower index.
pub fn argmax_rows(matrix: &Array2<f64>) -> Vec<usize> {
    matrix
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for (i, &v) in row.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            best
        })
        .collect()
}

pub(crate) struct ForwardTrace {
    pub input: Array2<f64>,
    /// Post-ReLU activations of each hidden layer.
    pub activations: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

#[cfg(test)]
mod tests;
