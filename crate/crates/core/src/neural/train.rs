//! Mini-batch training with early stopping, and the logistic-regression
//! baseline (a zero-hidden-layer softmax model with an L2 penalty trained
//! through the same loop).

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::resample::ClassWeights;
use crate::table::{ClassLabel, DataTable};

use super::{
    backward_sce, loss_weighted_sce, Encoder, InitScheme, MLPModel, NeuralError, NominalEncoding,
    OptimizerKind, OptimizerState, OutputMode,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hidden layer widths; empty for logistic regression.
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub learning_rate: f64,
    pub init: InitScheme,
    pub optimizer: OptimizerKind,
    pub class_weights: ClassWeights,
    /// L2 penalty strength on the weights (not biases).
    pub l2: f64,
    pub encoding: NominalEncoding,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![1200, 1200, 1200],
            batch_size: 512,
            max_epochs: 100,
            patience: 5,
            learning_rate: 1e-3,
            init: InitScheme::HeUniform,
            optimizer: OptimizerKind::Adam,
            class_weights: ClassWeights::uniform(),
            l2: 0.0,
            encoding: NominalEncoding::IntegerCodes,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub per_class_val_accuracy: [f64; ClassLabel::COUNT],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose weights were returned.
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("epoch,train_loss,val_loss,val_accuracy,acc_slight,acc_serious,acc_fatal\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.val_loss,
                e.val_accuracy,
                e.per_class_val_accuracy[0],
                e.per_class_val_accuracy[1],
                e.per_class_val_accuracy[2],
            ));
        }
        out
    }
}

/// A trained model plus the encoder that feeds it.
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: MLPModel,
    pub encoder: Encoder,
}

impl TrainedClassifier {
    pub fn predict(&self, table: &DataTable) -> Result<Vec<usize>, NeuralError> {
        let x = self.encoder.encode(table)?;
        self.model.predict_classes(&x)
    }
}

fn per_class_accuracy(preds: &[usize], labels: &[usize]) -> ([f64; 3], f64) {
    let mut hit = [0usize; 3];
    let mut total = [0usize; 3];
    let mut correct = 0usize;
    for (&p, &t) in preds.iter().zip(labels) {
        total[t] += 1;
        if p == t {
            hit[t] += 1;
            correct += 1;
        }
    }
    let mut per = [0.0f64; 3];
    for c in 0..3 {
        per[c] = if total[c] > 0 { hit[c] as f64 / total[c] as f64 } else { f64::NAN };
    }
    (per, correct as f64 / preds.len().max(1) as f64)
}

/// Trains a softmax classifier with shuffled mini-batches, tracking
/// validation loss each epoch; stops after `patience` epochs without
/// improvement and returns the best-validation-loss weights.
///
/// Validation loss is unweighted: class weights shape the training
/// gradient, not the stopping criterion.
pub fn train_supervised(
    train: &DataTable,
    val: &DataTable,
    config: &TrainConfig,
) -> Result<(TrainedClassifier, TrainingLog), NeuralError> {
    let encoder = Encoder::fit(train, config.encoding)?;
    let x_train = encoder.encode(train)?;
    let y_train = Encoder::labels(train)?;
    let x_val = encoder.encode(val)?;
    let y_val = Encoder::labels(val)?;

    let mut sizes = vec![encoder.width()];
    sizes.extend_from_slice(&config.hidden);
    sizes.push(ClassLabel::COUNT);
    let mut model =
        MLPModel::new(sizes, OutputMode::Softmax, config.init, derive_seed(config.seed, 0))?;
    let mut optimizer = OptimizerState::new(config.optimizer, &model);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));

    let n = x_train.nrows();
    let uniform = ClassWeights::uniform();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, MLPModel, usize)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut shuffle_rng);
        let mut train_loss = 0.0;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch = gather_rows(&x_train, chunk);
            let labels: Vec<usize> = chunk.iter().map(|&r| y_train[r]).collect();
            let (loss, grads) =
                backward_sce(&model, &batch, &labels, &config.class_weights, config.l2)?;
            optimizer.step(&mut model, &grads, config.learning_rate);
            train_loss += loss * chunk.len() as f64;
        }
        train_loss /= n as f64;

        let val_probs = model.forward(&x_val)?;
        let val_loss = loss_weighted_sce(&val_probs, &y_val, &uniform)?;
        let preds = super::argmax_rows(&val_probs);
        let (per_class, accuracy) = per_class_accuracy(&preds, &y_val);
        log.epochs.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            val_accuracy: accuracy,
            per_class_val_accuracy: per_class,
        });

        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, model.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    let (_, best_model, best_epoch) = best.expect("at least one epoch");
    log.best_epoch = best_epoch;
    Ok((TrainedClassifier { model: best_model, encoder }, log))
}

/// Multinomial logistic regression: the same training loop on a
/// zero-hidden-layer softmax model with an L2 penalty.
pub fn train_logreg(
    train: &DataTable,
    val: &DataTable,
    config: &TrainConfig,
) -> Result<(TrainedClassifier, TrainingLog), NeuralError> {
    let config = TrainConfig { hidden: Vec::new(), ..config.clone() };
    train_supervised(train, val, &config)
}

pub(crate) fn gather_rows(matrix: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), matrix.ncols()));
    for (i, &r) in rows.iter().enumerate() {
        out.row_mut(i).assign(&matrix.row(r));
    }
    out
}
