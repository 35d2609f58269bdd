//! Imbalance treatment: inverse-frequency class weights and SMOTE
//! oversampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::table::{ClassLabel, ColumnData, ColumnRole, DataTable, TableError};

/// Per-class loss multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    weights: [f64; ClassLabel::COUNT],
}

impl ClassWeights {
    pub fn uniform() -> Self {
        Self { weights: [1.0; ClassLabel::COUNT] }
    }

    pub fn explicit(slight: f64, serious: f64, fatal: f64) -> Self {
        Self { weights: [slight, serious, fatal] }
    }

    pub fn get(&self, label: ClassLabel) -> f64 {
        self.weights[label.index()]
    }

    pub fn as_array(&self) -> [f64; ClassLabel::COUNT] {
        self.weights
    }
}

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("class {class} has zero count")]
    ZeroCount { class: ClassLabel },
    #[error("class {class} has {members} members, need more than {k} to oversample")]
    TooFewMembers { class: ClassLabel, members: usize, k: usize },
    #[error("target count {target} for class {class} is below the current count {current}")]
    TargetBelowCurrent { class: ClassLabel, target: usize, current: usize },
    #[error("column `{column}` still has missing cells; impute or drop before resampling")]
    MissingValues { column: String },
    #[error("column `{column}` has role {role}; resampling expects feature/target columns only")]
    NonFeatureColumn { column: String, role: ColumnRole },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Inverse-frequency weights: w(c) = N / (K * n_c).
pub fn class_weights(counts: &[usize; ClassLabel::COUNT]) -> Result<ClassWeights, ResampleError> {
    let total: usize = counts.iter().sum();
    let k = ClassLabel::COUNT as f64;
    let mut weights = [0.0; ClassLabel::COUNT];
    for label in ClassLabel::ALL {
        let n = counts[label.index()];
        if n == 0 {
            return Err(ResampleError::ZeroCount { class: label });
        }
        weights[label.index()] = total as f64 / (k * n as f64);
    }
    Ok(ClassWeights { weights })
}

/// SMOTE settings. `target_counts` gives the desired per-class row counts
/// of the output (never below the current counts).
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub target_counts: [usize; ClassLabel::COUNT],
    pub seed: u64,
}

impl SmoteConfig {
    /// Equalized targets: every class brought up to the majority count.
    pub fn equalize(counts: &[usize; ClassLabel::COUNT], k_neighbors: usize, seed: u64) -> Self {
        let max = *counts.iter().max().unwrap_or(&0);
        Self { k_neighbors, target_counts: [max; ClassLabel::COUNT], seed }
    }
}

/// Parent rows of one synthetic sample (indices into the input table).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticParents {
    pub class: ClassLabel,
    pub base_row: usize,
    pub neighbor_row: usize,
}

/// SMOTE oversampling: each synthetic sample interpolates a random class
/// member toward one of its k nearest same-class neighbours with a single
/// uniform factor, so every synthetic cell lies componentwise between its
/// two parents. Nominal cells snap to the nearer parent's code.
pub fn smote(table: &DataTable, config: &SmoteConfig) -> Result<DataTable, ResampleError> {
    smote_with_provenance(table, config).map(|(t, _)| t)
}

/// As [`smote`], also returning each synthetic row's parents in output
/// order (synthetics follow the originals).
pub fn smote_with_provenance(
    table: &DataTable,
    config: &SmoteConfig,
) -> Result<(DataTable, Vec<SyntheticParents>), ResampleError> {
    let target_idx = table.target_index().map_err(ResampleError::Table)?;
    let feature_idx: Vec<usize> = (0..table.n_cols()).filter(|&i| i != target_idx).collect();
    for &i in &feature_idx {
        let cs = &table.schema()[i];
        if cs.role != ColumnRole::Feature {
            return Err(ResampleError::NonFeatureColumn {
                column: cs.name.clone(),
                role: cs.role,
            });
        }
        if table.column(i).missing_count() > 0 {
            return Err(ResampleError::MissingValues { column: cs.name.clone() });
        }
    }
    let labels = table.target_labels().map_err(ResampleError::Table)?;
    let counts = table.class_counts().map_err(ResampleError::Table)?;

    // Distances use min-max scaled features so large-code columns cannot
    // dominate; interpolation happens on the raw values.
    let n = table.n_rows();
    let p = feature_idx.len();
    let mut scaled = vec![0.0f64; n * p];
    for (j, &col) in feature_idx.iter().enumerate() {
        let data = table.column(col);
        let values: Vec<f64> = (0..n).map(|r| data.numeric_at(r)).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        for (r, &v) in values.iter().enumerate() {
            scaled[r * p + j] = if span > 0.0 { (v - min) / span } else { 0.0 };
        }
    }
    let dist2 = |a: usize, b: usize| -> f64 {
        (0..p).map(|j| {
            let d = scaled[a * p + j] - scaled[b * p + j];
            d * d
        }).sum()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut synth_cells: Vec<Vec<f64>> = vec![Vec::new(); feature_idx.len()];
    let mut synth_nominal_codes: Vec<Vec<i64>> = vec![Vec::new(); feature_idx.len()];
    let mut synth_labels: Vec<i64> = Vec::new();
    let mut provenance = Vec::new();

    for class in ClassLabel::ALL {
        let current = counts[class.index()];
        let target = config.target_counts[class.index()];
        if target < current {
            return Err(ResampleError::TargetBelowCurrent { class, target, current });
        }
        let extra = target - current;
        if extra == 0 {
            continue;
        }
        let members: Vec<usize> =
            (0..n).filter(|&r| labels[r] == class).collect();
        if members.len() <= config.k_neighbors {
            return Err(ResampleError::TooFewMembers {
                class,
                members: members.len(),
                k: config.k_neighbors,
            });
        }
        // k nearest same-class neighbours per member; ties toward the lower
        // row index.
        let neighbours: Vec<Vec<usize>> = members
            .iter()
            .map(|&m| {
                let mut others: Vec<(f64, usize)> =
                    members.iter().filter(|&&o| o != m).map(|&o| (dist2(m, o), o)).collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.truncate(config.k_neighbors);
                others.into_iter().map(|(_, o)| o).collect()
            })
            .collect();

        for _ in 0..extra {
            let base_pos = rng.gen_range(0..members.len());
            let base = members[base_pos];
            let neighbor = neighbours[base_pos][rng.gen_range(0..config.k_neighbors)];
            let u: f64 = rng.gen_range(0.0..1.0);
            for (j, &col) in feature_idx.iter().enumerate() {
                match table.column(col) {
                    ColumnData::Numerical(values) => {
                        synth_cells[j].push(values[base] + u * (values[neighbor] - values[base]));
                        synth_nominal_codes[j].push(0);
                    }
                    ColumnData::Nominal { codes, .. } => {
                        // Nearest parent: the interpolated point sits u of the
                        // way toward the neighbour.
                        let code = if u < 0.5 { codes[base] } else { codes[neighbor] };
                        synth_nominal_codes[j].push(code);
                        synth_cells[j].push(0.0);
                    }
                }
            }
            synth_labels.push(class.code());
            provenance.push(SyntheticParents { class, base_row: base, neighbor_row: neighbor });
        }
    }

    // Assemble: originals first, synthetics appended.
    let mut columns = Vec::with_capacity(table.n_cols());
    for i in 0..table.n_cols() {
        if i == target_idx {
            let mut codes: Vec<i64> =
                table.column(i).as_nominal().expect("target is nominal").to_vec();
            codes.extend_from_slice(&synth_labels);
            columns.push(ColumnData::Nominal { codes, labels: table.column(i).labels().cloned() });
            continue;
        }
        let j = feature_idx.iter().position(|&f| f == i).expect("feature column");
        match table.column(i) {
            ColumnData::Numerical(values) => {
                let mut out = values.clone();
                out.extend_from_slice(&synth_cells[j]);
                columns.push(ColumnData::Numerical(out));
            }
            ColumnData::Nominal { codes, labels } => {
                let mut out = codes.clone();
                out.extend_from_slice(&synth_nominal_codes[j]);
                columns.push(ColumnData::Nominal { codes: out, labels: labels.clone() });
            }
        }
    }
    let out = DataTable::new(table.schema().to_vec(), columns).map_err(ResampleError::Table)?;
    Ok((out, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ColumnSchema, FeatureKind};

    fn blob_table(labels: &[i64], xs: &[f64], ys: &[f64]) -> DataTable {
        DataTable::new(
            vec![
                ColumnSchema::feature("X", FeatureKind::Numerical),
                ColumnSchema::feature("Y", FeatureKind::Numerical),
                ColumnSchema::target("Casualty Severity"),
            ],
            vec![
                ColumnData::Numerical(xs.to_vec()),
                ColumnData::Numerical(ys.to_vec()),
                ColumnData::Nominal { codes: labels.to_vec(), labels: None },
            ],
        )
        .unwrap()
    }

    #[test]
    fn class_weights_match_reported_values() {
        // Aggregated severity distribution: 2,539,715 / 345,997 / 30,171.
        let w = class_weights(&[2_539_715, 345_997, 30_171]).unwrap();
        let reported = [0.383, 2.814, 32.105];
        for (label, expected) in ClassLabel::ALL.into_iter().zip(reported) {
            let rel = (w.get(label) - expected).abs() / expected;
            assert!(rel < 0.02, "{label}: {} vs {expected}", w.get(label));
        }
        assert!((w.get(ClassLabel::Slight) - 0.3827).abs() < 5e-4);
        assert!((w.get(ClassLabel::Serious) - 2.8092).abs() < 5e-4);
        assert!((w.get(ClassLabel::Fatal) - 32.215).abs() < 5e-3);
    }

    #[test]
    fn class_weights_balanced_and_zero() {
        let w = class_weights(&[10, 10, 10]).unwrap();
        assert_eq!(w.as_array(), [1.0, 1.0, 1.0]);
        assert!(matches!(
            class_weights(&[5, 0, 5]),
            Err(ResampleError::ZeroCount { class: ClassLabel::Serious })
        ));
    }

    #[test]
    fn synthetics_on_a_line_stay_on_it() {
        // Minority (fatal) points on y = x; slight is the bulk.
        let labels = [0, 0, 0, 0, 0, 0, 0, 0, 2, 2, 2, 2];
        let xs = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 2.0, 3.0, 4.0];
        let table = blob_table(&labels, &xs, &ys);
        // serious has zero rows and a zero target count.
        let config = SmoteConfig { k_neighbors: 3, target_counts: [8, 0, 20], seed: 5 };
        let out = smote(&table, &config).unwrap();
        let x = out.column_by_name("X").unwrap().as_numerical().unwrap();
        let y = out.column_by_name("Y").unwrap().as_numerical().unwrap();
        let t = out.column_by_name("Casualty Severity").unwrap().as_nominal().unwrap();
        for r in 12..out.n_rows() {
            assert_eq!(t[r], 2);
            assert_eq!(x[r], y[r], "synthetic off the y=x line at row {r}");
        }
    }

    #[test]
    fn coincident_parents_duplicate_the_point() {
        let labels = [0, 0, 0, 0, 2, 2];
        let xs = [10.0, 11.0, 12.0, 13.0, 3.0, 3.0];
        let ys = [1.0, 2.0, 3.0, 4.0, 7.0, 7.0];
        let table = blob_table(&labels, &xs, &ys);
        let config = SmoteConfig { k_neighbors: 1, target_counts: [4, 0, 10], seed: 9 };
        let out = smote(&table, &config).unwrap();
        let x = out.column_by_name("X").unwrap().as_numerical().unwrap();
        let y = out.column_by_name("Y").unwrap().as_numerical().unwrap();
        for r in 6..out.n_rows() {
            assert_eq!((x[r], y[r]), (3.0, 7.0));
        }
    }

    #[test]
    fn identity_when_targets_equal_current() {
        let labels = [0, 0, 1, 1, 2, 2, 0, 1, 2, 0];
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = (0..10).map(|v| f64::from(v) * 2.0).collect();
        let table = blob_table(&labels, &xs, &ys);
        let counts = table.class_counts().unwrap();
        let config = SmoteConfig { k_neighbors: 3, target_counts: counts, seed: 1 };
        let out = smote(&table, &config).unwrap();
        assert!(out.cell_identical(&table));
    }

    #[test]
    fn equalized_histogram_is_exact_and_originals_survive() {
        let mut labels = vec![0i64; 60];
        labels.extend(vec![1i64; 10]);
        labels.extend(vec![2i64; 5]);
        let n = labels.len();
        let xs: Vec<f64> = (0..n).map(|v| v as f64).collect();
        let ys: Vec<f64> = (0..n).map(|v| (v * v) as f64 / 10.0).collect();
        let table = blob_table(&labels, &xs, &ys);
        let counts = table.class_counts().unwrap();
        let config = SmoteConfig::equalize(&counts, 3, 42);
        let out = smote(&table, &config).unwrap();
        assert_eq!(out.class_counts().unwrap(), [60, 60, 60]);
        // Originals unchanged, in order, at the front.
        let x = out.column_by_name("X").unwrap().as_numerical().unwrap();
        assert_eq!(&x[..n], xs.as_slice());
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let mut labels = vec![0i64; 30];
        labels.extend(vec![2i64; 6]);
        let n = labels.len();
        let xs: Vec<f64> = (0..n).map(|v| (v as f64).sin() * 10.0).collect();
        let ys: Vec<f64> = (0..n).map(|v| (v as f64).cos() * 10.0).collect();
        let table = blob_table(&labels, &xs, &ys);
        let config = SmoteConfig { k_neighbors: 3, target_counts: [30, 0, 30], seed: 77 };
        let a = smote(&table, &config).unwrap();
        let b = smote(&table, &config).unwrap();
        assert!(a.cell_identical(&b));
        let other = smote(&table, &SmoteConfig { seed: 78, ..config }).unwrap();
        assert!(!a.cell_identical(&other));
    }

    #[test]
    fn too_few_members_is_an_error() {
        let labels = [0, 0, 0, 0, 2, 2];
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ys = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let table = blob_table(&labels, &xs, &ys);
        let config = SmoteConfig { k_neighbors: 3, target_counts: [4, 0, 8], seed: 2 };
        assert!(matches!(
            smote(&table, &config),
            Err(ResampleError::TooFewMembers { class: ClassLabel::Fatal, members: 2, k: 3 })
        ));
    }

    #[test]
    fn nominal_cells_snap_to_a_parent_code() {
        let table = DataTable::new(
            vec![
                ColumnSchema::feature("N", FeatureKind::Nominal),
                ColumnSchema::feature("X", FeatureKind::Numerical),
                ColumnSchema::target("Casualty Severity"),
            ],
            vec![
                ColumnData::Nominal { codes: vec![4, 9, 4, 9, 4, 9, 7, 7], labels: None },
                ColumnData::Numerical(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]),
                ColumnData::Nominal { codes: vec![2, 2, 2, 2, 2, 2, 0, 0], labels: None },
            ],
        )
        .unwrap();
        let config = SmoteConfig { k_neighbors: 2, target_counts: [2, 0, 26], seed: 3 };
        let out = smote(&table, &config).unwrap();
        let n = out.column_by_name("N").unwrap().as_nominal().unwrap();
        for r in 8..out.n_rows() {
            assert!(matches!(n[r], 4 | 9), "synthetic nominal code {} not a parent code", n[r]);
        }
    }

    #[test]
    fn missing_cells_are_rejected() {
        let table = DataTable::new(
            vec![
                ColumnSchema::feature("X", FeatureKind::Numerical),
                ColumnSchema::target("Casualty Severity"),
            ],
            vec![
                ColumnData::Numerical(vec![1.0, f64::NAN, 3.0, 4.0]),
                ColumnData::Nominal { codes: vec![0, 0, 2, 2], labels: None },
            ],
        )
        .unwrap();
        let config = SmoteConfig { k_neighbors: 1, target_counts: [2, 0, 4], seed: 0 };
        assert!(matches!(smote(&table, &config), Err(ResampleError::MissingValues { .. })));
    }
}
