use ndarray::{arr1, arr2, Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::resample::ClassWeights;
use crate::table::{ClassLabel, ColumnData, ColumnSchema, DataTable, FeatureKind};

fn zero_model(sizes: &[usize], mode: OutputMode) -> MLPModel {
    let weights = sizes
        .windows(2)
        .map(|w| Array2::zeros((w[1], w[0])))
        .collect();
    let biases = sizes[1..].iter().map(|&s| Array1::zeros(s)).collect();
    MLPModel::from_parameters(weights, biases, mode).unwrap()
}

#[test]
fn forward_zero_weights_softmax_is_uniform() {
    let model = zero_model(&[4, 3], OutputMode::Softmax);
    let batch = Array2::from_shape_fn((5, 4), |(r, c)| (r * c) as f64);
    let out = model.forward(&batch).unwrap();
    for row in out.rows() {
        for &p in row {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}

#[test]
fn forward_identity_linear_net() {
    let model = MLPModel::from_parameters(
        vec![arr2(&[[1.0, 0.0], [0.0, 1.0]])],
        vec![arr1(&[0.0, 0.0])],
        OutputMode::Linear,
    )
    .unwrap();
    let batch = arr2(&[[3.5, -2.0], [0.25, 7.0]]);
    assert_eq!(model.forward(&batch).unwrap(), batch);
}

#[test]
fn forward_matches_scalar_hand_computation() {
    // 2-2-2 softmax net evaluated by plain scalar arithmetic.
    let w1 = arr2(&[[1.0, 2.0], [-1.0, 0.5]]);
    let b1 = arr1(&[0.5, -0.25]);
    let w2 = arr2(&[[0.3, -0.7], [1.5, 0.2]]);
    let b2 = arr1(&[0.1, -0.2]);
    let model = MLPModel::from_parameters(vec![w1, w2], vec![b1, b2], OutputMode::Softmax).unwrap();

    let x = [1.0f64, 0.5];
    let z1 = [1.0 * x[0] + 2.0 * x[1] + 0.5, -x[0] + 0.5 * x[1] - 0.25];
    let a1 = [z1[0].max(0.0), z1[1].max(0.0)];
    let z2 = [0.3 * a1[0] - 0.7 * a1[1] + 0.1, 1.5 * a1[0] + 0.2 * a1[1] - 0.2];
    let m = z2[0].max(z2[1]);
    let e = [(z2[0] - m).exp(), (z2[1] - m).exp()];
    let expected = [e[0] / (e[0] + e[1]), e[1] / (e[0] + e[1])];

    let out = model.forward(&arr2(&[[x[0], x[1]]])).unwrap();
    assert!((out[(0, 0)] - expected[0]).abs() < 1e-12);
    assert!((out[(0, 1)] - expected[1]).abs() < 1e-12);
}

#[test]
fn forward_rejects_wrong_width() {
    let model = zero_model(&[4, 3], OutputMode::Softmax);
    let batch = Array2::zeros((2, 5));
    assert!(matches!(model.forward(&batch), Err(NeuralError::ShapeMismatch { .. })));
}

#[test]
fn weighted_sce_values() {
    let w = ClassWeights::uniform();
    // Probability 1 on the true class.
    let probs = arr2(&[[1.0, 0.0, 0.0]]);
    assert_eq!(loss_weighted_sce(&probs, &[0], &w).unwrap(), 0.0);
    // Uniform probabilities, unit weights.
    let third = 1.0 / 3.0;
    let probs = arr2(&[[third; 3], [third; 3]]);
    assert!((loss_weighted_sce(&probs, &[0, 2], &w).unwrap() - 3f64.ln()).abs() < 1e-12);
    // Single row, p = 0.25 on the true class, weight 2.
    let probs = arr2(&[[0.25, 0.5, 0.25]]);
    let w2 = ClassWeights::explicit(2.0, 1.0, 1.0);
    assert!((loss_weighted_sce(&probs, &[0], &w2).unwrap() - 2.0 * 4f64.ln()).abs() < 1e-12);
    // Out-of-range label.
    assert!(matches!(
        loss_weighted_sce(&probs, &[7], &w),
        Err(NeuralError::LabelOutOfRange { .. })
    ));
}

/// Central finite differences over every parameter of the model.
fn finite_difference_grads(
    model: &MLPModel,
    loss_fn: &dyn Fn(&MLPModel) -> f64,
    h: f64,
) -> Gradients {
    let mut shifted = model.clone();
    let n_layers = model.weights().len();
    let mut g_weights = Vec::new();
    let mut g_biases = Vec::new();
    for l in 0..n_layers {
        let mut gw = Array2::zeros(model.weights()[l].raw_dim());
        for idx in 0..model.weights()[l].len() {
            let (rows, cols) = (model.weights()[l].nrows(), model.weights()[l].ncols());
            let pos = (idx / cols, idx % cols);
            let original = model.weights()[l][pos];
            shifted.weights_mut()[l][pos] = original + h;
            let up = loss_fn(&shifted);
            shifted.weights_mut()[l][pos] = original - h;
            let down = loss_fn(&shifted);
            shifted.weights_mut()[l][pos] = original;
            gw[pos] = (up - down) / (2.0 * h);
            let _ = rows;
        }
        g_weights.push(gw);
        let mut gb = Array1::zeros(model.biases()[l].len());
        for j in 0..model.biases()[l].len() {
            let original = model.biases()[l][j];
            shifted.biases_mut()[l][j] = original + h;
            let up = loss_fn(&shifted);
            shifted.biases_mut()[l][j] = original - h;
            let down = loss_fn(&shifted);
            shifted.biases_mut()[l][j] = original;
            gb[j] = (up - down) / (2.0 * h);
        }
        g_biases.push(gb);
    }
    Gradients { weights: g_weights, biases: g_biases }
}

fn max_rel_error(analytic: &Gradients, numeric: &Gradients) -> f64 {
    let mut worst = 0.0f64;
    for (a, n) in analytic.weights.iter().zip(&numeric.weights) {
        for (&x, &y) in a.iter().zip(n.iter()) {
            worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1e-4));
        }
    }
    for (a, n) in analytic.biases.iter().zip(&numeric.biases) {
        for (&x, &y) in a.iter().zip(n.iter()) {
            worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1e-4));
        }
    }
    worst
}

fn random_batch(rows: usize, cols: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-2.0..2.0));
    let labels = (0..rows).map(|_| rng.gen_range(0..3)).collect();
    (batch, labels)
}

#[test]
fn sce_gradients_match_finite_differences() {
    let (batch, labels) = random_batch(16, 5, 42);
    let weights = ClassWeights::explicit(0.4, 2.8, 32.0);
    let model = MLPModel::new(vec![5, 8, 3], OutputMode::Softmax, InitScheme::HeUniform, 7).unwrap();
    let (_, analytic) = backward_sce(&model, &batch, &labels, &weights, 0.0).unwrap();
    let loss_fn = |m: &MLPModel| {
        loss_weighted_sce(&m.forward(&batch).unwrap(), &labels, &weights).unwrap()
    };
    let numeric = finite_difference_grads(&model, &loss_fn, 1e-4);
    let err = max_rel_error(&analytic, &numeric);
    assert!(err < 1e-5, "max relative error {err}");
}

#[test]
fn sce_gradients_with_l2_match_finite_differences() {
    let (batch, labels) = random_batch(12, 4, 3);
    let weights = ClassWeights::uniform();
    let l2 = 0.01;
    let model =
        MLPModel::new(vec![4, 6, 3], OutputMode::Softmax, InitScheme::GlorotUniform, 11).unwrap();
    let (_, analytic) = backward_sce(&model, &batch, &labels, &weights, l2).unwrap();
    let loss_fn = |m: &MLPModel| {
        let base = loss_weighted_sce(&m.forward(&batch).unwrap(), &labels, &weights).unwrap();
        base + l2 * m.weights().iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum::<f64>()
    };
    let numeric = finite_difference_grads(&model, &loss_fn, 1e-4);
    assert!(max_rel_error(&analytic, &numeric) < 1e-5);
}

#[test]
fn q_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch = Array2::from_shape_fn((16, 4), |_| rng.gen_range(-1.5..1.5));
    let actions: Vec<usize> = (0..16).map(|_| rng.gen_range(0..3)).collect();
    let targets: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let model = MLPModel::new(vec![4, 8, 3], OutputMode::Linear, InitScheme::HeUniform, 13).unwrap();
    let (_, analytic) = backward_q(&model, &batch, &actions, &targets).unwrap();
    let loss_fn =
        |m: &MLPModel| q_loss(&m.forward(&batch).unwrap(), &actions, &targets).unwrap();
    let numeric = finite_difference_grads(&model, &loss_fn, 1e-4);
    assert!(max_rel_error(&analytic, &numeric) < 1e-5);
}

#[test]
fn zero_weight_net_bias_gradient_closed_form() {
    // Balanced labels, class weights (1, 2, 3). Softmax of zeros is uniform,
    // so d/db = mean_i w(y_i) (1/3 - onehot) = (1/3, 0, -1/3); all other
    // gradients vanish because hidden activations are zero.
    let model = zero_model(&[4, 5, 3], OutputMode::Softmax);
    let batch = Array2::from_shape_fn((3, 4), |(r, c)| (r + c) as f64);
    let labels = vec![0, 1, 2];
    let weights = ClassWeights::explicit(1.0, 2.0, 3.0);
    let (_, grads) = backward_sce(&model, &batch, &labels, &weights, 0.0).unwrap();
    let gb = &grads.biases[1];
    assert!((gb[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!(gb[1].abs() < 1e-15);
    assert!((gb[2] + 1.0 / 3.0).abs() < 1e-15);
    for w in &grads.weights {
        assert!(w.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn duplicating_batch_rows_leaves_gradients_unchanged() {
    let (batch, labels) = random_batch(8, 5, 21);
    let mut doubled = Array2::zeros((16, 5));
    for r in 0..8 {
        doubled.row_mut(r).assign(&batch.row(r));
        doubled.row_mut(r + 8).assign(&batch.row(r));
    }
    let mut doubled_labels = labels.clone();
    doubled_labels.extend_from_slice(&labels);
    let weights = ClassWeights::explicit(1.0, 3.0, 9.0);
    let model = MLPModel::new(vec![5, 6, 3], OutputMode::Softmax, InitScheme::HeUniform, 2).unwrap();
    let (loss_a, ga) = backward_sce(&model, &batch, &labels, &weights, 0.0).unwrap();
    let (loss_b, gb) = backward_sce(&model, &doubled, &doubled_labels, &weights, 0.0).unwrap();
    assert!((loss_a - loss_b).abs() < 1e-12);
    for (a, b) in ga.weights.iter().zip(&gb.weights) {
        for (&x, &y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn adam_first_step_is_signed_learning_rate() {
    let mut model = zero_model(&[2, 2], OutputMode::Linear);
    let grads = Gradients {
        weights: vec![arr2(&[[3.0, -0.5], [0.0, 10.0]])],
        biases: vec![arr1(&[-2.0, 0.0])],
    };
    let mut state = AdamState::new(&model);
    let lr = 0.01;
    adam_step(&mut model, &grads, &mut state, lr);
    for (p, g) in model.weights()[0].iter().zip(grads.weights[0].iter()) {
        if *g == 0.0 {
            assert_eq!(*p, 0.0);
        } else {
            assert!((p + lr * g.signum()).abs() < lr * 1e-6, "param {p} gradient {g}");
        }
    }
    assert_eq!(state.step_count(), 1);
}

#[test]
fn adam_zero_gradient_keeps_parameters() {
    let mut model = MLPModel::new(vec![3, 2], OutputMode::Linear, InitScheme::HeUniform, 3).unwrap();
    let before = model.weights()[0].clone();
    let grads = Gradients { weights: vec![Array2::zeros((2, 3))], biases: vec![Array1::zeros(2)] };
    let mut state = AdamState::new(&model);
    adam_step(&mut model, &grads, &mut state, 0.05);
    assert_eq!(model.weights()[0], before);
}

#[test]
fn adam_two_opposed_steps_stay_bounded() {
    let mut model = zero_model(&[1, 1], OutputMode::Linear);
    let lr = 0.1;
    let mut state = AdamState::new(&model);
    let g = Gradients { weights: vec![arr2(&[[4.0]])], biases: vec![arr1(&[0.0])] };
    adam_step(&mut model, &g, &mut state, lr);
    let neg = Gradients { weights: vec![arr2(&[[-4.0]])], biases: vec![arr1(&[0.0])] };
    adam_step(&mut model, &neg, &mut state, lr);
    assert!(model.weights()[0][(0, 0)].abs() < 2.0 * lr);
}

/// Three Gaussian blobs with the given per-class counts and separation (in
/// units of the within-class spread).
fn blobs(counts: [usize; 3], separation: f64, seed: u64) -> DataTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [
        [0.0, 0.0, 0.0, 0.0],
        [separation, separation, 0.0, separation],
        [-separation, separation, separation, 0.0],
    ];
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 4];
    let mut labels = Vec::new();
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            for (j, col) in cols.iter_mut().enumerate() {
                // Box-Muller from two uniforms.
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                col.push(centers[class][j] + z);
            }
            labels.push(class as i64);
        }
    }
    let mut schema: Vec<ColumnSchema> = (0..4)
        .map(|j| ColumnSchema::feature(format!("F{j}"), FeatureKind::Numerical))
        .collect();
    schema.push(ColumnSchema::target("Casualty Severity"));
    let mut columns: Vec<ColumnData> = cols.into_iter().map(ColumnData::Numerical).collect();
    columns.push(ColumnData::Nominal { codes: labels, labels: None });
    DataTable::new(schema, columns).unwrap()
}

fn fast_config(hidden: Vec<usize>, seed: u64) -> TrainConfig {
    TrainConfig {
        hidden,
        batch_size: 128,
        max_epochs: 50,
        patience: 5,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_blobs_reach_95_percent_validation_accuracy() {
    let table = blobs([1000, 1000, 1000], 6.0, 9);
    let (train, val) = table.split(0.75, 1).unwrap();
    let (_, log) = train_supervised(&train, &val, &fast_config(vec![32], 4)).unwrap();
    let best = &log.epochs[log.best_epoch - 1];
    assert!(best.val_accuracy >= 0.95, "accuracy {}", best.val_accuracy);
    assert!(log.epochs.len() <= 50);
}

#[test]
fn early_stopping_halts_after_patience() {
    let table = blobs([200, 200, 200], 4.0, 2);
    let (train, val) = table.split(0.75, 3).unwrap();
    // Zero learning rate: no epoch can improve, so the best epoch is the
    // first and training stops exactly `patience` epochs later.
    let config = TrainConfig { learning_rate: 0.0, ..fast_config(vec![8], 5) };
    let (_, log) = train_supervised(&train, &val, &config).unwrap();
    assert_eq!(log.best_epoch, 1);
    assert_eq!(log.epochs.len(), 1 + config.patience);
}

#[test]
fn returned_model_has_min_validation_loss() {
    let table = blobs([400, 300, 300], 2.0, 12);
    let (train, val) = table.split(0.75, 7).unwrap();
    let config = fast_config(vec![16], 6);
    let (clf, log) = train_supervised(&train, &val, &config).unwrap();
    let min_loss = log.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    let best_logged = log.epochs[log.best_epoch - 1].val_loss;
    assert_eq!(best_logged, min_loss);
    // Recompute the returned model's validation loss directly.
    let x_val = clf.encoder.encode(&val).unwrap();
    let y_val = Encoder::labels(&val).unwrap();
    let probs = clf.model.forward(&x_val).unwrap();
    let recomputed = loss_weighted_sce(&probs, &y_val, &ClassWeights::uniform()).unwrap();
    assert!((recomputed - min_loss).abs() < 1e-12);
}

#[test]
fn class_weighting_raises_rare_class_recall() {
    // 90/9/1 imbalance with overlapping blobs; paired seeds.
    let table = blobs([2700, 270, 30], 1.8, 31);
    let (train, val) = table.split(0.75, 11).unwrap();
    let counts = train.class_counts().unwrap();
    let weighted_config = TrainConfig {
        class_weights: crate::resample::class_weights(&counts).unwrap(),
        ..fast_config(vec![24], 8)
    };
    let unit_config = TrainConfig { class_weights: ClassWeights::uniform(), ..weighted_config.clone() };

    let (weighted, _) = train_supervised(&train, &val, &weighted_config).unwrap();
    let (unweighted, _) = train_supervised(&train, &val, &unit_config).unwrap();
    let truth = Encoder::labels(&val).unwrap();
    let recall = |clf: &TrainedClassifier| {
        let preds = clf.predict(&val).unwrap();
        let fatal: Vec<usize> = truth
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == ClassLabel::Fatal.index())
            .map(|(i, _)| i)
            .collect();
        fatal.iter().filter(|&&i| preds[i] == ClassLabel::Fatal.index()).count() as f64
            / fatal.len() as f64
    };
    let rw = recall(&weighted);
    let ru = recall(&unweighted);
    assert!(rw > ru, "weighted recall {rw} vs unweighted {ru}");
}

#[test]
fn logreg_matches_zero_hidden_mlp_exactly() {
    let table = blobs([300, 300, 300], 5.0, 17);
    let (train, val) = table.split(0.75, 5).unwrap();
    let config = TrainConfig { l2: 0.0, max_epochs: 10, ..fast_config(vec![], 3) };
    let (_, log_a) = train_logreg(&train, &val, &config).unwrap();
    let (_, log_b) = train_supervised(&train, &val, &config).unwrap();
    assert_eq!(log_a, log_b);
}

#[test]
fn logreg_l2_shrinks_weights_monotonically() {
    let table = blobs([300, 300, 300], 5.0, 19);
    let (train, val) = table.split(0.75, 9).unwrap();
    let mut norms = Vec::new();
    for l2 in [0.0, 0.1, 10.0] {
        let config = TrainConfig { l2, max_epochs: 20, ..fast_config(vec![], 7) };
        let (clf, _) = train_logreg(&train, &val, &config).unwrap();
        let norm: f64 =
            clf.model.weights().iter().map(|w| w.iter().map(|v| v * v).sum::<f64>()).sum();
        norms.push(norm);
    }
    assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
}

#[test]
fn logreg_separable_accuracy() {
    let table = blobs([500, 400, 400], 5.0, 23);
    let (train, val) = table.split(0.75, 13).unwrap();
    let config =
        TrainConfig { max_epochs: 60, learning_rate: 0.01, ..fast_config(vec![], 15) };
    let (_, log) = train_logreg(&train, &val, &config).unwrap();
    let acc = log.epochs[log.best_epoch - 1].val_accuracy;
    assert!(acc >= 0.95, "accuracy {acc} over {} epochs", log.epochs.len());
}

#[test]
fn training_is_bit_reproducible() {
    let table = blobs([200, 150, 150], 3.0, 29);
    let (train, val) = table.split(0.75, 21).unwrap();
    let config = TrainConfig { max_epochs: 8, ..fast_config(vec![12], 33) };
    let (a, log_a) = train_supervised(&train, &val, &config).unwrap();
    let (b, log_b) = train_supervised(&train, &val, &config).unwrap();
    assert_eq!(log_a, log_b);
    for (wa, wb) in a.model.weights().iter().zip(b.model.weights()) {
        assert_eq!(wa, wb);
    }
}

#[test]
fn sgd_loss_scale_equivariance() {
    // Scaling class weights by 8 and the learning rate by 1/8 leaves SGD
    // trajectories identical (powers of two keep the float math exact), so
    // predicted classes after each epoch match.
    let table = blobs([300, 200, 100], 2.0, 37);
    let (train, val) = table.split(0.75, 17).unwrap();
    let scale = 8.0;
    let base = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 0.05,
        class_weights: ClassWeights::explicit(0.5, 1.0, 2.0),
        max_epochs: 6,
        patience: 50,
        ..fast_config(vec![10], 41)
    };
    let scaled = TrainConfig {
        learning_rate: base.learning_rate / scale,
        class_weights: ClassWeights::explicit(0.5 * scale, 1.0 * scale, 2.0 * scale),
        ..base.clone()
    };
    let (clf_a, _) = train_supervised(&train, &val, &base).unwrap();
    let (clf_b, _) = train_supervised(&train, &val, &scaled).unwrap();
    assert_eq!(clf_a.predict(&val).unwrap(), clf_b.predict(&val).unwrap());
    for (wa, wb) in clf_a.model.weights().iter().zip(clf_b.model.weights()) {
        assert_eq!(wa, wb);
    }
}

#[test]
fn predict_classes_tie_breaks_low_and_batches() {
    let model = zero_model(&[2, 3], OutputMode::Softmax);
    // Zero net: all rows uniform, argmax ties resolve to class 0.
    let batch = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
    assert_eq!(model.predict_classes(&batch).unwrap(), vec![0, 0]);
    // Batch prediction equals row-by-row prediction.
    let model = MLPModel::new(vec![2, 5, 3], OutputMode::Softmax, InitScheme::HeUniform, 51).unwrap();
    let whole = model.predict_classes(&batch).unwrap();
    for r in 0..batch.nrows() {
        let row = batch.row(r).insert_axis(ndarray::Axis(0)).to_owned();
        assert_eq!(model.predict_classes(&row).unwrap()[0], whole[r]);
    }
}

#[test]
fn argmax_prefers_lower_index_on_ties() {
    let m = arr2(&[[0.5, 0.5, 0.0], [0.2, 0.5, 0.3]]);
    assert_eq!(argmax_rows(&m), vec![0, 1]);
}

#[test]
fn checkpoint_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.mlp");
    let model = MLPModel::new(vec![7, 4, 3], OutputMode::Linear, InitScheme::HeUniform, 77).unwrap();
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.layer_sizes(), model.layer_sizes());
    assert_eq!(loaded.output_mode(), model.output_mode());
    for (a, b) in model.weights().iter().zip(loaded.weights()) {
        for (&x, &y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    // Corrupt the version field.
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[4] = 9;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(NeuralError::UnsupportedVersion(9))));
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(NeuralError::BadMagic)));
}

#[test]
fn encoder_standardizes_from_train_only() {
    let train = DataTable::new(
        vec![
            ColumnSchema::feature("X", FeatureKind::Numerical),
            ColumnSchema::feature("N", FeatureKind::Nominal),
            ColumnSchema::target("Casualty Severity"),
        ],
        vec![
            ColumnData::Numerical(vec![0.0, 2.0, 4.0, 6.0]),
            ColumnData::Nominal { codes: vec![3, 5, 3, 5], labels: None },
            ColumnData::Nominal { codes: vec![0, 1, 2, 0], labels: None },
        ],
    )
    .unwrap();
    let encoder = Encoder::fit(&train, NominalEncoding::IntegerCodes).unwrap();
    let x = encoder.encode(&train).unwrap();
    // Mean 3, population std sqrt(5).
    let std = 5f64.sqrt();
    assert!((x[(0, 0)] - (0.0 - 3.0) / std).abs() < 1e-12);
    assert_eq!(x[(1, 1)], 5.0);

    let onehot = Encoder::fit(&train, NominalEncoding::OneHot).unwrap();
    assert_eq!(onehot.width(), 3); // 1 numeric + 2 categories
    let xh = onehot.encode(&train).unwrap();
    assert_eq!((xh[(0, 1)], xh[(0, 2)]), (1.0, 0.0));
    assert_eq!((xh[(1, 1)], xh[(1, 2)]), (0.0, 1.0));

    // Encoder persistence round-trip.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("enc.txt");
    onehot.save(&path).unwrap();
    assert_eq!(Encoder::load(&path).unwrap(), onehot);
}

#[test]
fn encoder_rejects_missing_cells() {
    let table = DataTable::new(
        vec![
            ColumnSchema::feature("X", FeatureKind::Numerical),
            ColumnSchema::target("Casualty Severity"),
        ],
        vec![
            ColumnData::Numerical(vec![1.0, f64::NAN]),
            ColumnData::Nominal { codes: vec![0, 1], labels: None },
        ],
    )
    .unwrap();
    assert!(matches!(
        Encoder::fit(&table, NominalEncoding::IntegerCodes),
        Err(NeuralError::MissingValues { .. })
    ));
}
