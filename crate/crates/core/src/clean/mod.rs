//! Column drops, unknown-code recoding, domain-knowledge imputation rules,
//! required-column row filtering, and Date/Time expansion.
//!
//! The rule set ships as a plain-text plan file (see `plan.rs` for the
//! grammar) so the domain knowledge stays data, editable per corpus,
//! rather than code.

use std::collections::HashSet;

use thiserror::Error;

use crate::table::{ColumnData, DataTable, TableError, MISSING_CODE};

mod plan;
mod time;

pub use plan::parse_plan;
pub use time::{expand_time, expand_time_named, parse_hhmm};

/// One predicate over a row.
#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    /// Cell is the missing marker.
    Missing { column: String },
    /// Cell is present (used by cross-fill rules).
    Present { column: String },
    /// Nominal code or numerical value equals the literal.
    Equals { column: String, code: i64 },
    /// Nominal code is one of the listed categories.
    InSet { column: String, codes: Vec<i64> },
    /// Cell renders as `HH:MM` and falls in `[start, end)` minutes.
    TimeWindow { column: String, start_minutes: u32, end_minutes: u32 },
}

impl Guard {
    pub fn column(&self) -> &str {
        match self {
            Guard::Missing { column }
            | Guard::Present { column }
            | Guard::Equals { column, .. }
            | Guard::InSet { column, .. }
            | Guard::TimeWindow { column, .. } => column,
        }
    }
}

/// Right-hand side of a rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    /// Write a constant code/value. The missing marker is rejected at parse
    /// time: rules fill cells, they never blank them.
    Code { column: String, code: i64 },
    /// Copy the value of another column on the same row. Does not fire when
    /// the source cell is missing.
    CopyFrom { column: String, source: String },
}

impl Assignment {
    pub fn column(&self) -> &str {
        match self {
            Assignment::Code { column, .. } | Assignment::CopyFrom { column, .. } => column,
        }
    }
}

/// One domain-knowledge imputation rule: a guard conjunction and an
/// assignment, applied per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainRule {
    pub id: String,
    pub guards: Vec<Guard>,
    pub assignment: Assignment,
}

/// Declarative cleaning plan: drops, unknown-code recodes, ordered domain
/// rules, and columns whose absence drops the row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningPlan {
    pub drop_columns: Vec<String>,
    /// (column, code): occurrences of `code` are rewritten to the missing
    /// marker.
    pub recode_unknown: Vec<(String, i64)>,
    pub domain_rules: Vec<DomainRule>,
    pub require_present: Vec<String>,
}

impl CleaningPlan {
    pub fn parse(text: &str) -> Result<Self, CleanError> {
        parse_plan(text)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, CleanError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CleanError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// A column may be dropped or ruled on, not both.
    fn validate(&self) -> Result<(), CleanError> {
        let dropped: HashSet<&str> = self.drop_columns.iter().map(String::as_str).collect();
        for rule in &self.domain_rules {
            let mut cols: Vec<&str> = rule.guards.iter().map(Guard::column).collect();
            cols.push(rule.assignment.column());
            if let Assignment::CopyFrom { source, .. } = &rule.assignment {
                cols.push(source);
            }
            if let Some(col) = cols.iter().find(|c| dropped.contains(*c)) {
                return Err(CleanError::DropRuleOverlap {
                    rule: rule.id.clone(),
                    column: col.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Counts of what a cleaning pass changed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningReport {
    pub columns_dropped: Vec<String>,
    /// Per recode directive, cells rewritten to missing.
    pub recoded_cells: Vec<(String, usize)>,
    /// Per rule id, cells changed.
    pub rule_changes: Vec<(String, usize)>,
    pub rows_dropped: usize,
}

impl CleaningReport {
    /// `item,name,count` lines for the stage artifact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,name,count\n");
        for c in &self.columns_dropped {
            out.push_str(&format!("drop,{c},1\n"));
        }
        for (c, n) in &self.recoded_cells {
            out.push_str(&format!("recode,{c},{n}\n"));
        }
        for (r, n) in &self.rule_changes {
            out.push_str(&format!("rule,{r},{n}\n"));
        }
        out.push_str(&format!("rows_dropped,,{}\n", self.rows_dropped));
        out
    }
}

#[derive(Debug, Error)]
pub enum CleanError {
    #[error("rule `{rule}` references missing column `{column}`")]
    RuleColumnMissing { rule: String, column: String },
    #[error("plan references missing column `{column}`")]
    PlanColumnMissing { column: String },
    #[error("rule `{rule}` touches dropped column `{column}`")]
    DropRuleOverlap { rule: String, column: String },
    #[error("rule `{rule}` copies between mismatched kinds ({target} <- {from_column})")]
    CopyKindMismatch { rule: String, target: String, from_column: String },
    #[error("plan parse error at line {line}: {reason}")]
    PlanParse { line: usize, reason: String },
    #[error("malformed timestamp `{value}` at row {row}")]
    MalformedTimestamp { row: usize, value: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Table(#[from] TableError),
}

fn guard_holds(guard: &Guard, table_cols: &[ColumnData], col_idx: usize, row: usize) -> bool {
    match guard {
        Guard::Missing { .. } => table_cols[col_idx].is_missing(row),
        Guard::Present { .. } => !table_cols[col_idx].is_missing(row),
        Guard::Equals { code, .. } => match &table_cols[col_idx] {
            ColumnData::Nominal { codes, .. } => codes[row] != MISSING_CODE && codes[row] == *code,
            ColumnData::Numerical(values) => values[row] == *code as f64,
        },
        Guard::InSet { codes, .. } => match &table_cols[col_idx] {
            ColumnData::Nominal { codes: cells, .. } => {
                cells[row] != MISSING_CODE && codes.contains(&cells[row])
            }
            ColumnData::Numerical(_) => false,
        },
        Guard::TimeWindow { start_minutes, end_minutes, .. } => {
            let col = &table_cols[col_idx];
            if col.is_missing(row) {
                return false;
            }
            match parse_hhmm(&col.render(row)) {
                Some(minutes) => minutes >= *start_minutes && minutes < *end_minutes,
                None => false,
            }
        }
    }
}

/// Applies a cleaning plan: drops, recodes, domain rules in declared order,
/// then removal of rows missing any required column.
///
/// Rules only fill cells (missing -> present); re-running the same plan on
/// the output changes nothing for fill-style plans like the shipped default.
pub fn apply_cleaning(
    table: &DataTable,
    plan: &CleaningPlan,
) -> Result<(DataTable, CleaningReport), CleanError> {
    plan.validate()?;
    let mut report = CleaningReport::default();

    // Column drops.
    for col in &plan.drop_columns {
        if table.column_index(col).is_none() {
            return Err(CleanError::PlanColumnMissing { column: col.clone() });
        }
    }
    let table = table.drop_columns(&plan.drop_columns)?;
    report.columns_dropped = plan.drop_columns.clone();

    let schema = table.schema().to_vec();
    let mut columns: Vec<ColumnData> = table.columns().to_vec();

    // Unknown-code recodes.
    for (col_name, unknown_code) in &plan.recode_unknown {
        let idx = table
            .column_index(col_name)
            .ok_or_else(|| CleanError::PlanColumnMissing { column: col_name.clone() })?;
        let mut changed = 0usize;
        match &mut columns[idx] {
            ColumnData::Nominal { codes, .. } => {
                for c in codes.iter_mut() {
                    if *c == *unknown_code {
                        *c = MISSING_CODE;
                        changed += 1;
                    }
                }
            }
            ColumnData::Numerical(values) => {
                for v in values.iter_mut() {
                    if *v == *unknown_code as f64 {
                        *v = f64::NAN;
                        changed += 1;
                    }
                }
            }
        }
        report.recoded_cells.push((col_name.clone(), changed));
    }

    // Domain rules, in declared order. Each rule reads the effects of the
    // rules before it.
    let n_rows = table.n_rows();
    for rule in &plan.domain_rules {
        let guard_idx: Vec<usize> = rule
            .guards
            .iter()
            .map(|g| {
                table.column_index(g.column()).ok_or_else(|| CleanError::RuleColumnMissing {
                    rule: rule.id.clone(),
                    column: g.column().to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        let target_idx = table.column_index(rule.assignment.column()).ok_or_else(|| {
            CleanError::RuleColumnMissing {
                rule: rule.id.clone(),
                column: rule.assignment.column().to_string(),
            }
        })?;
        let source_idx = match &rule.assignment {
            Assignment::CopyFrom { source, .. } => {
                let idx = table.column_index(source).ok_or_else(|| {
                    CleanError::RuleColumnMissing { rule: rule.id.clone(), column: source.clone() }
                })?;
                if schema[idx].kind != schema[target_idx].kind {
                    return Err(CleanError::CopyKindMismatch {
                        rule: rule.id.clone(),
                        target: rule.assignment.column().to_string(),
                        from_column: source.clone(),
                    });
                }
                Some(idx)
            }
            Assignment::Code { .. } => None,
        };

        let mut changed = 0usize;
        for row in 0..n_rows {
            let fires = rule
                .guards
                .iter()
                .zip(&guard_idx)
                .all(|(g, &idx)| guard_holds(g, &columns, idx, row));
            if !fires {
                continue;
            }
            match (&rule.assignment, source_idx) {
                (Assignment::Code { code, .. }, _) => match &mut columns[target_idx] {
                    ColumnData::Nominal { codes, .. } => {
                        if codes[row] != *code {
                            codes[row] = *code;
                            changed += 1;
                        }
                    }
                    ColumnData::Numerical(values) => {
                        let v = *code as f64;
                        if values[row] != v {
                            values[row] = v;
                            changed += 1;
                        }
                    }
                },
                (Assignment::CopyFrom { .. }, Some(src)) => {
                    if columns[src].is_missing(row) {
                        continue; // never write the missing marker
                    }
                    match (&columns[src].clone(), &mut columns[target_idx]) {
                        (
                            ColumnData::Nominal { codes: src_codes, .. },
                            ColumnData::Nominal { codes, .. },
                        ) => {
                            if codes[row] != src_codes[row] {
                                codes[row] = src_codes[row];
                                changed += 1;
                            }
                        }
                        (ColumnData::Numerical(src_values), ColumnData::Numerical(values)) => {
                            if values[row] != src_values[row] {
                                values[row] = src_values[row];
                                changed += 1;
                            }
                        }
                        _ => unreachable!("copy kinds validated above"),
                    }
                }
                (Assignment::CopyFrom { .. }, None) => unreachable!(),
            }
        }
        report.rule_changes.push((rule.id.clone(), changed));
    }

    let cleaned = DataTable::new(schema, columns)?;

    // Required-column row filter.
    for col in &plan.require_present {
        if cleaned.column_index(col).is_none() {
            return Err(CleanError::PlanColumnMissing { column: col.clone() });
        }
    }
    let required: Vec<usize> =
        plan.require_present.iter().filter_map(|c| cleaned.column_index(c)).collect();
    let keep: Vec<usize> = (0..cleaned.n_rows())
        .filter(|&row| required.iter().all(|&c| !cleaned.column(c).is_missing(row)))
        .collect();
    report.rows_dropped = cleaned.n_rows() - keep.len();
    let filtered = if report.rows_dropped == 0 { cleaned } else { cleaned.gather(&keep) };

    Ok((filtered, report))
}

#[cfg(test)]
mod tests;
