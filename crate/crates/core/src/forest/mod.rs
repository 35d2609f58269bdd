//! Random forests over mixed-type tables and MissForest-style iterative
//! imputation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::derive_seed;
use crate::table::{ColumnData, ColumnRole, DataTable, FeatureKind, TableError, MISSING_CODE};

mod missforest;
mod tree;

pub use missforest::{
    missforest_impute, parse_imputation_plan, ColumnImputation, ImputationPlan, ImputationReport,
    Stage,
};
pub use tree::{LeafValue, SplitRule, Tree};

use tree::{bootstrap, TargetView, TreeBuilder};

/// Forest hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Candidate features per split; `None` picks ceil(sqrt(p)) for
    /// classification and ceil(p/3) for regression.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_leaf: 5, mtry: None, seed: 0 }
    }
}

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("target column `{column}` has no observed values")]
    AllMissingTarget { column: String },
    #[error("target column `{column}` has {count} missing cells in the training rows")]
    MissingTargetCells { column: String, count: usize },
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("prediction input is missing column `{column}` of kind {kind}")]
    SchemaMismatch { column: String, kind: FeatureKind },
    #[error("plan column `{column}` has no observed values")]
    NoObservedValues { column: String },
    #[error("column `{column}` appears in more than one imputation stage")]
    OverlappingStages { column: String },
    #[error("imputation plan parse error at line {line}: {reason}")]
    PlanParse { line: usize, reason: String },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// A fitted forest. Immutable; prediction borrows it freely across threads.
#[derive(Debug, Clone)]
pub struct Forest {
    features: Vec<(String, FeatureKind)>,
    target_kind: FeatureKind,
    trees: Vec<Tree>,
    /// Per tree, per training row: whether the row entered the bootstrap.
    in_bag: Vec<Vec<bool>>,
    /// Constant prediction when the training target had a single value.
    constant: Option<ConstantPrediction>,
}

#[derive(Debug, Clone, Copy)]
enum ConstantPrediction {
    Code(i64),
    Value(f64),
}

impl Forest {
    /// True when training degenerated to a constant predictor.
    pub fn is_degenerate(&self) -> bool {
        self.constant.is_some()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn target_kind(&self) -> FeatureKind {
        self.target_kind
    }

    fn resolve_features<'t>(&self, table: &'t DataTable) -> Result<Vec<&'t ColumnData>, ForestError> {
        self.features
            .iter()
            .map(|(name, kind)| {
                let idx = table.column_index(name).ok_or(ForestError::SchemaMismatch {
                    column: name.clone(),
                    kind: *kind,
                })?;
                let col = table.column(idx);
                if col.kind() != *kind {
                    return Err(ForestError::SchemaMismatch { column: name.clone(), kind: *kind });
                }
                Ok(col)
            })
            .collect()
    }

    /// Predicts every row of `rows`: majority vote across trees for nominal
    /// targets (ties toward the lower code), mean for numerical ones.
    pub fn predict(&self, rows: &DataTable) -> Result<ColumnData, ForestError> {
        let features = self.resolve_features(rows)?;
        Ok(self.predict_cols(&features, &(0..rows.n_rows()).collect::<Vec<_>>()))
    }

    /// Prediction over explicit feature column references (positions must
    /// match the training feature order).
    pub(crate) fn predict_cols(&self, features: &[&ColumnData], rows: &[usize]) -> ColumnData {
        match self.target_kind {
            FeatureKind::Nominal => {
                let codes = rows
                    .iter()
                    .map(|&r| match self.constant {
                        Some(ConstantPrediction::Code(c)) => c,
                        _ => self.vote(features, r, None),
                    })
                    .collect();
                ColumnData::Nominal { codes, labels: None }
            }
            FeatureKind::Numerical => {
                let values = rows
                    .iter()
                    .map(|&r| match self.constant {
                        Some(ConstantPrediction::Value(v)) => v,
                        _ => self.average(features, r, None),
                    })
                    .collect();
                ColumnData::Numerical(values)
            }
        }
    }

    /// Out-of-bag predictions over the training table: each row is voted on
    /// only by trees whose bootstrap excluded it. Rows in every bag come
    /// back missing.
    pub fn oob_predict(&self, train: &DataTable) -> Result<ColumnData, ForestError> {
        let features = self.resolve_features(train)?;
        let out = match self.target_kind {
            FeatureKind::Nominal => ColumnData::Nominal {
                codes: (0..train.n_rows())
                    .map(|r| match self.constant {
                        Some(ConstantPrediction::Code(c)) => c,
                        _ => self.vote(&features, r, Some(r)),
                    })
                    .collect(),
                labels: None,
            },
            FeatureKind::Numerical => ColumnData::Numerical(
                (0..train.n_rows())
                    .map(|r| match self.constant {
                        Some(ConstantPrediction::Value(v)) => v,
                        _ => self.average(&features, r, Some(r)),
                    })
                    .collect(),
            ),
        };
        Ok(out)
    }

    fn tree_eligible(&self, tree_idx: usize, oob_row: Option<usize>) -> bool {
        match oob_row {
            Some(r) => !self.in_bag[tree_idx][r],
            None => true,
        }
    }

    fn vote(&self, features: &[&ColumnData], row: usize, oob_row: Option<usize>) -> i64 {
        let mut counts: std::collections::BTreeMap<i64, u32> = std::collections::BTreeMap::new();
        for (t, tree) in self.trees.iter().enumerate() {
            if self.tree_eligible(t, oob_row) {
                *counts.entry(tree.leaf_for(features, row).majority()).or_insert(0) += 1;
            }
        }
        // Ascending code order makes ties resolve toward the lower code.
        counts
            .into_iter()
            .fold((MISSING_CODE, 0u32), |best, (code, n)| if n > best.1 { (code, n) } else { best })
            .0
    }

    fn average(&self, features: &[&ColumnData], row: usize, oob_row: Option<usize>) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (t, tree) in self.trees.iter().enumerate() {
            if self.tree_eligible(t, oob_row) {
                sum += tree.leaf_for(features, row).mean();
                n += 1;
            }
        }
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    }
}

fn default_mtry(p: usize, target_kind: FeatureKind) -> usize {
    let m = match target_kind {
        FeatureKind::Nominal => (p as f64).sqrt().ceil() as usize,
        FeatureKind::Numerical => ((p as f64) / 3.0).ceil() as usize,
    };
    m.clamp(1, p.max(1))
}

/// Canonical row order: rows sorted by cell content across the given
/// columns. Bootstrap draws index into this order, so permuting the
/// training rows cannot change the grown trees.
fn canonical_order(columns: &[&ColumnData], target: &ColumnData, rows: &[usize]) -> Vec<usize> {
    let mut order = rows.to_vec();
    let cell_cmp = |col: &ColumnData, a: usize, b: usize| -> std::cmp::Ordering {
        match col {
            ColumnData::Nominal { codes, .. } => codes[a].cmp(&codes[b]),
            ColumnData::Numerical(values) => values[a].total_cmp(&values[b]),
        }
    };
    order.sort_by(|&a, &b| {
        for col in columns {
            let ord = cell_cmp(col, a, b);
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        cell_cmp(target, a, b)
    });
    order
}

/// Fits a forest predicting `target` from every feature/target-role column
/// of the table except the target itself.
///
/// Each tree grows on a bootstrap sample with `mtry` candidate features per
/// split; trees are grown in parallel but each from its own seed derived
/// from `(config.seed, tree index)`, so results are independent of thread
/// scheduling and of training row order.
pub fn fit_forest(
    table: &DataTable,
    target: &str,
    config: &ForestConfig,
) -> Result<Forest, ForestError> {
    let target_idx = table
        .column_index(target)
        .ok_or_else(|| TableError::UnknownColumn { column: target.to_string() })?;
    let feature_idx: Vec<usize> = (0..table.n_cols())
        .filter(|&i| {
            i != target_idx
                && matches!(table.schema()[i].role, ColumnRole::Feature | ColumnRole::Target)
        })
        .collect();
    let features: Vec<(String, FeatureKind)> = feature_idx
        .iter()
        .map(|&i| (table.schema()[i].name.clone(), table.schema()[i].kind))
        .collect();
    let cols: Vec<&ColumnData> = feature_idx.iter().map(|&i| table.column(i)).collect();
    let rows: Vec<usize> = (0..table.n_rows()).collect();
    fit_cols(features, &cols, table.column(target_idx), target, &rows, config)
}

pub(crate) fn fit_cols(
    features: Vec<(String, FeatureKind)>,
    cols: &[&ColumnData],
    target_col: &ColumnData,
    target_name: &str,
    rows: &[usize],
    config: &ForestConfig,
) -> Result<Forest, ForestError> {
    if rows.len() < 2 {
        return Err(ForestError::TooFewRows(rows.len()));
    }
    let missing = rows.iter().filter(|&&r| target_col.is_missing(r)).count();
    if missing == rows.len() {
        return Err(ForestError::AllMissingTarget { column: target_name.to_string() });
    }
    if missing > 0 {
        return Err(ForestError::MissingTargetCells { column: target_name.to_string(), count: missing });
    }

    let target_kind = target_col.kind();
    let n_total = rows.iter().copied().max().unwrap_or(0) + 1;

    // Degenerate target: constant predictor, flagged.
    let constant = match target_col {
        ColumnData::Nominal { codes, .. } => {
            let first = codes[rows[0]];
            rows.iter().all(|&r| codes[r] == first).then_some(ConstantPrediction::Code(first))
        }
        ColumnData::Numerical(values) => {
            let first = values[rows[0]];
            rows.iter().all(|&r| values[r] == first).then_some(ConstantPrediction::Value(first))
        }
    };
    if let Some(constant) = constant {
        return Ok(Forest {
            features,
            target_kind,
            trees: Vec::new(),
            in_bag: Vec::new(),
            constant: Some(constant),
        });
    }

    let canonical = canonical_order(cols, target_col, rows);
    let mtry = config.mtry.unwrap_or_else(|| default_mtry(cols.len(), target_kind));
    let target_view = match target_col {
        ColumnData::Nominal { codes, .. } => TargetView::Nominal(codes),
        ColumnData::Numerical(values) => TargetView::Numerical(values),
    };
    let builder = TreeBuilder {
        features: cols,
        target: target_view,
        min_leaf: config.min_leaf.max(1),
        max_depth: config.max_depth,
        mtry,
    };

    let grown: Vec<(Tree, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, t as u64));
            let sample = bootstrap(canonical.len(), &mut rng);
            let mut in_bag = vec![false; n_total];
            let rows: Vec<usize> = sample
                .iter()
                .map(|&v| {
                    let actual = canonical[v];
                    in_bag[actual] = true;
                    actual
                })
                .collect();
            (builder.grow(&rows, &mut rng), in_bag)
        })
        .collect();

    let (trees, in_bag) = grown.into_iter().unzip();
    Ok(Forest { features, target_kind, trees, in_bag, constant: None })
}
