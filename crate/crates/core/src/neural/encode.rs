//! Table-to-matrix encoding for the classifiers.
//!
//! Numerical features are standardized with statistics from the training
//! split only; nominal features are fed as raw integer codes by default,
//! or expanded to one-hot indicators behind the config switch.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::table::{ColumnData, ColumnRole, DataTable, FeatureKind};

use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NominalEncoding {
    #[default]
    IntegerCodes,
    OneHot,
}

#[derive(Debug, Clone, PartialEq)]
enum FeatureEncoding {
    /// (mean, std) from the fit split; std 0 encodes to 0.
    Standardized { mean: f64, std: f64 },
    RawCode,
    /// Observed categories, sorted; unseen codes encode to all-zeros.
    OneHot { categories: Vec<i64> },
}

/// Fitted feature encoder; apply with [`Encoder::encode`].
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    features: Vec<(String, FeatureEncoding)>,
    width: usize,
}

impl Encoder {
    /// Learns encoding statistics from the training split.
    pub fn fit(train: &DataTable, encoding: NominalEncoding) -> Result<Self, NeuralError> {
        let mut features = Vec::new();
        let mut width = 0usize;
        for (i, cs) in train.schema().iter().enumerate() {
            if cs.role != ColumnRole::Feature {
                continue;
            }
            let col = train.column(i);
            if col.missing_count() > 0 {
                return Err(NeuralError::MissingValues { column: cs.name.clone() });
            }
            let enc = match (cs.kind, encoding) {
                (FeatureKind::Numerical, _) => {
                    let values = col.as_numerical().expect("kind checked");
                    let n = values.len().max(1) as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    FeatureEncoding::Standardized { mean, std: var.sqrt() }
                }
                (FeatureKind::Nominal, NominalEncoding::IntegerCodes) => FeatureEncoding::RawCode,
                (FeatureKind::Nominal, NominalEncoding::OneHot) => {
                    let mut categories: Vec<i64> =
                        col.as_nominal().expect("kind checked").to_vec();
                    categories.sort_unstable();
                    categories.dedup();
                    FeatureEncoding::OneHot { categories }
                }
            };
            width += match &enc {
                FeatureEncoding::OneHot { categories } => categories.len(),
                _ => 1,
            };
            features.push((cs.name.clone(), enc));
        }
        Ok(Self { features, width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Encodes the feature columns of a schema-compatible table.
    pub fn encode(&self, table: &DataTable) -> Result<Array2<f64>, NeuralError> {
        let n = table.n_rows();
        let mut out = Array2::zeros((n, self.width));
        let mut offset = 0usize;
        for (name, enc) in &self.features {
            let col = table.column_by_name(name)?;
            if col.missing_count() > 0 {
                return Err(NeuralError::MissingValues { column: name.clone() });
            }
            match (enc, col) {
                (FeatureEncoding::Standardized { mean, std }, ColumnData::Numerical(values)) => {
                    for (r, &v) in values.iter().enumerate() {
                        out[(r, offset)] = if *std > 0.0 { (v - mean) / std } else { 0.0 };
                    }
                    offset += 1;
                }
                (FeatureEncoding::RawCode, ColumnData::Nominal { codes, .. }) => {
                    for (r, &c) in codes.iter().enumerate() {
                        out[(r, offset)] = c as f64;
                    }
                    offset += 1;
                }
                (FeatureEncoding::OneHot { categories }, ColumnData::Nominal { codes, .. }) => {
                    for (r, c) in codes.iter().enumerate() {
                        if let Ok(k) = categories.binary_search(c) {
                            out[(r, offset + k)] = 1.0;
                        }
                    }
                    offset += categories.len();
                }
                _ => {
                    return Err(NeuralError::Table(crate::table::TableError::KindMismatch {
                        column: name.clone(),
                        expected: match enc {
                            FeatureEncoding::Standardized { .. } => FeatureKind::Numerical,
                            _ => FeatureKind::Nominal,
                        },
                        actual: col.kind(),
                    }))
                }
            }
        }
        Ok(out)
    }

    /// Target labels as 0..3 codes.
    pub fn labels(table: &DataTable) -> Result<Vec<usize>, NeuralError> {
        Ok(table.target_labels()?.into_iter().map(|l| l.index()).collect())
    }

    /// Plain-text persistence so the evaluate stage can re-encode test data.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        let path = path.as_ref();
        let mut out = String::new();
        for (name, enc) in &self.features {
            match enc {
                FeatureEncoding::Standardized { mean, std } => {
                    writeln!(out, "standardized,{name},{mean},{std}").unwrap();
                }
                FeatureEncoding::RawCode => writeln!(out, "rawcode,{name}").unwrap(),
                FeatureEncoding::OneHot { categories } => {
                    let cats: Vec<String> = categories.iter().map(i64::to_string).collect();
                    writeln!(out, "onehot,{name},{}", cats.join("|")).unwrap();
                }
            }
        }
        std::fs::write(path, out)
            .map_err(|e| NeuralError::Io { path: path.display().to_string(), source: e })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| NeuralError::Io { path: path.display().to_string(), source: e })?;
        let mut features = Vec::new();
        let mut width = 0usize;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.splitn(3, ',').collect();
            let enc = match parts.as_slice() {
                ["standardized", _, rest] => {
                    let (mean, std) =
                        rest.split_once(',').ok_or(NeuralError::MalformedCheckpoint)?;
                    FeatureEncoding::Standardized {
                        mean: mean.parse().map_err(|_| NeuralError::MalformedCheckpoint)?,
                        std: std.parse().map_err(|_| NeuralError::MalformedCheckpoint)?,
                    }
                }
                ["rawcode", _] => FeatureEncoding::RawCode,
                ["onehot", _, cats] => FeatureEncoding::OneHot {
                    categories: cats
                        .split('|')
                        .map(|c| c.parse().map_err(|_| NeuralError::MalformedCheckpoint))
                        .collect::<Result<_, _>>()?,
                },
                _ => return Err(NeuralError::MalformedCheckpoint),
            };
            width += match &enc {
                FeatureEncoding::OneHot { categories } => categories.len(),
                _ => 1,
            };
            features.push((parts[1].to_string(), enc));
        }
        Ok(Self { features, width })
    }
}
