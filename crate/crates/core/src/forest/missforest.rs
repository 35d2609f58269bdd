//! Iterative random-forest imputation with staged column groups.
//!
//! Stages run in order; within a stage, columns are (re-)predicted from the
//! currently-complete columns in ascending missing-count order until the
//! change between successive sweeps starts to grow, at which point the
//! previous sweep's values are kept. Later stages see earlier stages'
//! imputed values as observed data.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::table::{ColumnData, ColumnRole, DataTable, FeatureKind, TableError, MISSING_CODE};

use super::{fit_cols, ForestConfig, ForestError};

/// One ordered group of columns imputed together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub columns: Vec<String>,
}

/// Staged imputation plan plus forest settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationPlan {
    pub stages: Vec<Stage>,
    /// Settings for every per-column forest; `n_trees` can be overridden
    /// per column.
    pub forest: ForestConfig,
    pub trees_override: BTreeMap<String, usize>,
    pub max_iterations: usize,
}

impl Default for ImputationPlan {
    fn default() -> Self {
        Self {
            stages: Vec::new(),
            forest: ForestConfig::default(),
            trees_override: BTreeMap::new(),
            max_iterations: 10,
        }
    }
}

impl ImputationPlan {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ForestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ForestError::Table(TableError::Io { path: path.display().to_string(), source: e })
        })?;
        parse_imputation_plan(&text)
    }

    /// Single-stage plan covering the given columns.
    pub fn single_stage(columns: Vec<String>, forest: ForestConfig) -> Self {
        Self { stages: vec![Stage { columns }], forest, ..Self::default() }
    }
}

/// Parses `stage <n>: <col>[ trees=<k>], <col> ...` lines; `#` comments.
/// Column names with spaces are double-quoted.
pub fn parse_imputation_plan(text: &str) -> Result<ImputationPlan, ForestError> {
    let mut plan = ImputationPlan::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let err = |reason: String| ForestError::PlanParse { line: line_no, reason };
        if line.is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix("stage")
            .ok_or_else(|| err(format!("expected `stage`, found `{line}`")))?;
        let (number, cols) =
            rest.split_once(':').ok_or_else(|| err("expected `:` after stage number".into()))?;
        number
            .trim()
            .parse::<usize>()
            .map_err(|_| err(format!("bad stage number `{}`", number.trim())))?;
        let mut stage = Stage { columns: Vec::new() };
        for entry in cols.split(',') {
            let entry = entry.trim();
            if entry.is_empty() {
                return Err(err("empty column entry".into()));
            }
            let (name, tail) = if let Some(stripped) = entry.strip_prefix('"') {
                let end = stripped
                    .find('"')
                    .ok_or_else(|| err(format!("unterminated quote in `{entry}`")))?;
                (stripped[..end].to_string(), stripped[end + 1..].trim())
            } else {
                let mut parts = entry.splitn(2, char::is_whitespace);
                let name = parts.next().unwrap_or("").to_string();
                (name, parts.next().unwrap_or("").trim())
            };
            if !tail.is_empty() {
                let trees = tail
                    .strip_prefix("trees=")
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&t| t >= 1)
                    .ok_or_else(|| err(format!("expected `trees=<k>`, found `{tail}`")))?;
                plan.trees_override.insert(name.clone(), trees);
            }
            stage.columns.push(name);
        }
        plan.stages.push(stage);
    }
    Ok(plan)
}

/// Per-column imputation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnImputation {
    pub column: String,
    pub masked_cells: usize,
    /// Sweeps the column's stage ran (0 when nothing was missing).
    pub iterations: usize,
    /// Normalized change of the column's final kept sweep.
    pub final_change: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImputationReport {
    pub per_column: Vec<ColumnImputation>,
}

impl ImputationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("column,masked_cells,iterations,final_change\n");
        for c in &self.per_column {
            out.push_str(&format!(
                "{},{},{},{}\n",
                c.column, c.masked_cells, c.iterations, c.final_change
            ));
        }
        out
    }
}

fn observed_mode(codes: &[i64]) -> i64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &c in codes {
        if c != MISSING_CODE {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    counts.into_iter().fold((MISSING_CODE, 0), |best, (c, n)| if n > best.1 { (c, n) } else { best }).0
}

fn observed_mean(values: &[f64]) -> f64 {
    let observed: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    observed.iter().sum::<f64>() / observed.len() as f64
}

/// Normalized change between successive sweeps of one column, restricted to
/// the originally-missing cells: Stekhoven's sum((new-old)^2)/sum(new^2)
/// for numerical columns, changed-share for nominal ones.
fn column_delta(new: &ColumnData, old: &ColumnData, masked: &[usize]) -> f64 {
    match (new, old) {
        (ColumnData::Numerical(n), ColumnData::Numerical(o)) => {
            let mut num = 0.0;
            let mut den = 0.0;
            for &r in masked {
                let d = n[r] - o[r];
                num += d * d;
                den += n[r] * n[r];
            }
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        }
        (ColumnData::Nominal { codes: n, .. }, ColumnData::Nominal { codes: o, .. }) => {
            if masked.is_empty() {
                0.0
            } else {
                masked.iter().filter(|&&r| n[r] != o[r]).count() as f64 / masked.len() as f64
            }
        }
        _ => unreachable!("kind cannot change during imputation"),
    }
}

/// Runs the staged imputation. Originally-observed cells are never touched;
/// every plan column comes back complete.
pub fn missforest_impute(
    table: &DataTable,
    plan: &ImputationPlan,
) -> Result<(DataTable, ImputationReport), ForestError> {
    // Validate the plan against the table.
    let mut seen: HashSet<&str> = HashSet::new();
    for stage in &plan.stages {
        for col in &stage.columns {
            if !seen.insert(col) {
                return Err(ForestError::OverlappingStages { column: col.clone() });
            }
            let idx = table
                .column_index(col)
                .ok_or_else(|| TableError::UnknownColumn { column: col.clone() })?;
            if table.column(idx).missing_count() == table.n_rows() {
                return Err(ForestError::NoObservedValues { column: col.clone() });
            }
        }
    }

    let schema = table.schema().to_vec();
    let mut working: Vec<ColumnData> = table.columns().to_vec();
    let mut report = ImputationReport::default();
    // Masked cell positions per column, fixed at entry.
    let masked_rows: HashMap<usize, Vec<usize>> = (0..table.n_cols())
        .map(|i| {
            let rows: Vec<usize> =
                (0..table.n_rows()).filter(|&r| table.column(i).is_missing(r)).collect();
            (i, rows)
        })
        .collect();

    for (stage_no, stage) in plan.stages.iter().enumerate() {
        // Columns to impute, easiest (fewest missing) first.
        let mut todo: Vec<usize> = stage
            .columns
            .iter()
            .map(|c| table.column_index(c).expect("validated above"))
            .filter(|i| !masked_rows[i].is_empty())
            .collect();
        for col in &stage.columns {
            let idx = table.column_index(col).expect("validated above");
            if masked_rows[&idx].is_empty() {
                report.per_column.push(ColumnImputation {
                    column: col.clone(),
                    masked_cells: 0,
                    iterations: 0,
                    final_change: 0.0,
                });
            }
        }
        if todo.is_empty() {
            continue;
        }
        todo.sort_by_key(|i| (masked_rows[i].len(), *i));

        // Mean/mode initialization of this stage's missing cells.
        for &i in &todo {
            match &mut working[i] {
                ColumnData::Nominal { codes, .. } => {
                    let mode = observed_mode(codes);
                    for c in codes.iter_mut() {
                        if *c == MISSING_CODE {
                            *c = mode;
                        }
                    }
                }
                ColumnData::Numerical(values) => {
                    let mean = observed_mean(values);
                    for v in values.iter_mut() {
                        if v.is_nan() {
                            *v = mean;
                        }
                    }
                }
            }
        }

        // Predictors: every currently-complete feature/target column. The
        // stage's own columns were just initialized, so they qualify.
        let predictor_idx: Vec<usize> = (0..schema.len())
            .filter(|&i| {
                matches!(schema[i].role, ColumnRole::Feature | ColumnRole::Target)
                    && working[i].missing_count() == 0
            })
            .collect();

        let mut prev_deltas: Option<(Option<f64>, Option<f64>)> = None;
        let mut iterations = 0usize;
        let mut per_col_delta: HashMap<usize, f64> = HashMap::new();
        let mut prev_per_col_delta: HashMap<usize, f64> = HashMap::new();

        for sweep in 1..=plan.max_iterations {
            iterations = sweep;
            let snapshot: HashMap<usize, ColumnData> =
                todo.iter().map(|&i| (i, working[i].clone())).collect();

            for (pos, &i) in todo.iter().enumerate() {
                let features: Vec<(String, FeatureKind)> = predictor_idx
                    .iter()
                    .filter(|&&p| p != i)
                    .map(|&p| (schema[p].name.clone(), schema[p].kind))
                    .collect();
                let cols: Vec<&ColumnData> =
                    predictor_idx.iter().filter(|&&p| p != i).map(|&p| &working[p]).collect();
                let train_rows: Vec<usize> =
                    (0..table.n_rows()).filter(|&r| !table.column(i).is_missing(r)).collect();
                let config = ForestConfig {
                    n_trees: plan
                        .trees_override
                        .get(&schema[i].name)
                        .copied()
                        .unwrap_or(plan.forest.n_trees),
                    seed: crate::derive_seed(
                        plan.forest.seed,
                        ((stage_no as u64) << 32) ^ ((pos as u64) << 16) ^ sweep as u64,
                    ),
                    ..plan.forest.clone()
                };
                // The original (pre-initialization) column supplies the
                // training targets so initialization noise never leaks in.
                let forest = fit_cols(
                    features,
                    &cols,
                    table.column(i),
                    &schema[i].name,
                    &train_rows,
                    &config,
                )?;
                let predicted = forest.predict_cols(&cols, &masked_rows[&i]);
                match (&mut working[i], &predicted) {
                    (ColumnData::Nominal { codes, .. }, ColumnData::Nominal { codes: new, .. }) => {
                        for (k, &r) in masked_rows[&i].iter().enumerate() {
                            codes[r] = new[k];
                        }
                    }
                    (ColumnData::Numerical(values), ColumnData::Numerical(new)) => {
                        for (k, &r) in masked_rows[&i].iter().enumerate() {
                            values[r] = new[k];
                        }
                    }
                    _ => unreachable!("prediction kind matches target kind"),
                }
            }

            // Stage-level normalized change by kind.
            let mut num_delta: Option<f64> = None;
            let mut cat_delta: Option<f64> = None;
            let mut num_num = 0.0;
            let mut num_den = 0.0;
            let mut cat_changed = 0usize;
            let mut cat_total = 0usize;
            for &i in &todo {
                let delta = column_delta(&working[i], &snapshot[&i], &masked_rows[&i]);
                per_col_delta.insert(i, delta);
                match &working[i] {
                    ColumnData::Numerical(values) => {
                        let old = snapshot[&i].as_numerical().expect("kind stable");
                        for &r in &masked_rows[&i] {
                            let d = values[r] - old[r];
                            num_num += d * d;
                            num_den += values[r] * values[r];
                        }
                        num_delta = Some(if num_den == 0.0 { 0.0 } else { num_num / num_den });
                    }
                    ColumnData::Nominal { codes, .. } => {
                        let old = snapshot[&i].as_nominal().expect("kind stable");
                        cat_changed += masked_rows[&i].iter().filter(|&&r| codes[r] != old[r]).count();
                        cat_total += masked_rows[&i].len();
                        cat_delta = Some(cat_changed as f64 / cat_total as f64);
                    }
                }
            }

            let converged = num_delta.unwrap_or(0.0) == 0.0 && cat_delta.unwrap_or(0.0) == 0.0;
            if let Some((prev_num, prev_cat)) = prev_deltas {
                let num_up = match (num_delta, prev_num) {
                    (Some(now), Some(before)) => now > before,
                    _ => true, // kind absent: no constraint
                };
                let cat_up = match (cat_delta, prev_cat) {
                    (Some(now), Some(before)) => now > before,
                    _ => true,
                };
                if num_up && cat_up {
                    // Divergence: keep the previous sweep's values.
                    for (&i, col) in &snapshot {
                        working[i] = col.clone();
                    }
                    iterations = sweep - 1;
                    per_col_delta = prev_per_col_delta;
                    break;
                }
            }
            prev_deltas = Some((num_delta, cat_delta));
            prev_per_col_delta = per_col_delta.clone();
            if converged {
                break;
            }
        }

        for &i in &todo {
            report.per_column.push(ColumnImputation {
                column: schema[i].name.clone(),
                masked_cells: masked_rows[&i].len(),
                iterations,
                final_change: per_col_delta.get(&i).copied().unwrap_or(0.0),
            });
        }
    }

    let imputed = DataTable::new(schema, working)?;
    Ok((imputed, report))
}
