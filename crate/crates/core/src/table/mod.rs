//! Columnar mixed-type table with missing-value semantics.
//!
//! Nominal cells are integer codes with `-1` as the missing marker; numerical
//! cells are finite `f64` with NaN as the in-memory missing marker (rendered
//! back as `-1` on export). Nominal columns whose source tokens are not
//! integers (accident indices, raw timestamps) are dictionary-encoded and
//! rendered back to their original strings.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

mod csv_io;
mod merge;
mod split;

pub use csv_io::{load_csv, load_schema_file, save_csv, save_schema_file};
pub use merge::{merge_datasets, MergeReport, OrphanKey};

/// Declared type of a column: integer-coded categories or real values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Nominal,
    Numerical,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Nominal => write!(f, "nominal"),
            FeatureKind::Numerical => write!(f, "numerical"),
        }
    }
}

/// Part a column plays in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Feature,
    Target,
    Key,
    Dropped,
}

impl fmt::Display for ColumnRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRole::Feature => write!(f, "feature"),
            ColumnRole::Target => write!(f, "target"),
            ColumnRole::Key => write!(f, "key"),
            ColumnRole::Dropped => write!(f, "dropped"),
        }
    }
}

/// Name, kind and role of one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: FeatureKind,
    pub role: ColumnRole,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, kind: FeatureKind, role: ColumnRole) -> Self {
        Self { name: name.into(), kind, role }
    }

    pub fn feature(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self::new(name, kind, ColumnRole::Feature)
    }

    pub fn key(name: impl Into<String>) -> Self {
        Self::new(name, FeatureKind::Nominal, ColumnRole::Key)
    }

    pub fn target(name: impl Into<String>) -> Self {
        Self::new(name, FeatureKind::Nominal, ColumnRole::Target)
    }
}

/// The three-class injury severity target.
///
/// The integer mapping is fixed: slight = 0, serious = 1, fatal = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Slight,
    Serious,
    Fatal,
}

impl ClassLabel {
    pub const COUNT: usize = 3;

    pub const ALL: [ClassLabel; 3] = [ClassLabel::Slight, ClassLabel::Serious, ClassLabel::Fatal];

    pub fn code(self) -> i64 {
        match self {
            ClassLabel::Slight => 0,
            ClassLabel::Serious => 1,
            ClassLabel::Fatal => 2,
        }
    }

    pub fn index(self) -> usize {
        self.code() as usize
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(ClassLabel::Slight),
            1 => Some(ClassLabel::Serious),
            2 => Some(ClassLabel::Fatal),
            _ => None,
        }
    }

    /// Minority classes terminate an episode when misclassified in the RL
    /// formulation.
    pub fn is_minority(self) -> bool {
        !matches!(self, ClassLabel::Slight)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Slight => write!(f, "slight"),
            ClassLabel::Serious => write!(f, "serious"),
            ClassLabel::Fatal => write!(f, "fatal"),
        }
    }
}

/// Code for a missing nominal cell.
pub const MISSING_CODE: i64 = -1;

/// String every missing cell renders to on export.
pub const MISSING_TOKEN: &str = "-1";

/// Code-to-string mapping for nominal columns whose raw tokens were not
/// integers. Codes are assigned in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dictionary {
    values: Vec<String>,
    lookup: HashMap<String, i64>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> i64 {
        if let Some(&code) = self.lookup.get(token) {
            return code;
        }
        let code = self.values.len() as i64;
        self.values.push(token.to_string());
        self.lookup.insert(token.to_string(), code);
        code
    }

    pub fn get(&self, code: i64) -> Option<&str> {
        usize::try_from(code).ok().and_then(|i| self.values.get(i)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-column storage.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Nominal { codes: Vec<i64>, labels: Option<Dictionary> },
    Numerical(Vec<f64>),
}

impl ColumnData {
    pub fn kind(&self) -> FeatureKind {
        match self {
            ColumnData::Nominal { .. } => FeatureKind::Nominal,
            ColumnData::Numerical(_) => FeatureKind::Numerical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ColumnData::Nominal { codes, .. } => codes.len(),
            ColumnData::Numerical(values) => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Nominal { codes, .. } => codes[row] == MISSING_CODE,
            ColumnData::Numerical(values) => values[row].is_nan(),
        }
    }

    pub fn missing_count(&self) -> usize {
        match self {
            ColumnData::Nominal { codes, .. } => {
                codes.iter().filter(|&&c| c == MISSING_CODE).count()
            }
            ColumnData::Numerical(values) => values.iter().filter(|v| v.is_nan()).count(),
        }
    }

    pub fn as_nominal(&self) -> Option<&[i64]> {
        match self {
            ColumnData::Nominal { codes, .. } => Some(codes),
            ColumnData::Numerical(_) => None,
        }
    }

    pub fn as_numerical(&self) -> Option<&[f64]> {
        match self {
            ColumnData::Numerical(values) => Some(values),
            ColumnData::Nominal { .. } => None,
        }
    }

    pub fn labels(&self) -> Option<&Dictionary> {
        match self {
            ColumnData::Nominal { labels, .. } => labels.as_ref(),
            ColumnData::Numerical(_) => None,
        }
    }

    /// Cell as a number for model-ready encodings. Missing cells are NaN.
    pub fn numeric_at(&self, row: usize) -> f64 {
        match self {
            ColumnData::Nominal { codes, .. } => {
                if codes[row] == MISSING_CODE {
                    f64::NAN
                } else {
                    codes[row] as f64
                }
            }
            ColumnData::Numerical(values) => values[row],
        }
    }

    /// Canonical string form of a cell; the inverse of CSV parsing.
    pub fn render(&self, row: usize) -> String {
        match self {
            ColumnData::Nominal { codes, labels } => {
                let code = codes[row];
                if code == MISSING_CODE {
                    MISSING_TOKEN.to_string()
                } else if let Some(dict) = labels {
                    dict.get(code).unwrap_or(MISSING_TOKEN).to_string()
                } else {
                    code.to_string()
                }
            }
            ColumnData::Numerical(values) => {
                let v = values[row];
                if v.is_nan() {
                    MISSING_TOKEN.to_string()
                } else {
                    format!("{v}")
                }
            }
        }
    }

    fn gather(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Nominal { codes, labels } => ColumnData::Nominal {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                labels: labels.clone(),
            },
            ColumnData::Numerical(values) => {
                ColumnData::Numerical(rows.iter().map(|&r| values[r]).collect())
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("unknown column `{column}`")]
    UnknownColumn { column: String },
    #[error("duplicate column `{column}`")]
    DuplicateColumn { column: String },
    #[error("cannot parse `{value}` as {kind} (row {row}, column `{column}`)")]
    TypeParse { row: usize, column: String, kind: FeatureKind, value: String },
    #[error("column `{column}` has {actual} rows, table has {expected}")]
    LengthMismatch { column: String, expected: usize, actual: usize },
    #[error("column `{column}` is {actual}, expected {expected}")]
    KindMismatch { column: String, expected: FeatureKind, actual: FeatureKind },
    #[error("table has no rows")]
    EmptyTable,
    #[error("train fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("expected exactly one target column, found {0}")]
    TargetCount(usize),
    #[error("key column `{column}` must be nominal")]
    NonNominalKey { column: String },
    #[error("duplicate key {key} in `{table}`")]
    DuplicateKey { table: String, key: String },
    #[error("table `{table}` is missing key column `{column}`")]
    MissingKeyColumn { table: String, column: String },
    #[error("target column contains code {code} outside the severity classes (row {row})")]
    InvalidTargetCode { row: usize, code: i64 },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: ::csv::Error },
    #[error("bad schema line {line}: {reason}")]
    SchemaFile { line: usize, reason: String },
}

/// Immutable columnar table. All pipeline operations take a table and return
/// a new one.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    schema: Vec<ColumnSchema>,
    columns: Vec<ColumnData>,
    n_rows: usize,
}

impl DataTable {
    /// Builds a table, checking column lengths, kinds and code invariants.
    pub fn new(schema: Vec<ColumnSchema>, columns: Vec<ColumnData>) -> Result<Self, TableError> {
        assert_eq!(schema.len(), columns.len(), "schema/column count mismatch");
        let n_rows = columns.first().map_or(0, ColumnData::len);
        let mut seen = HashMap::new();
        for (cs, col) in schema.iter().zip(&columns) {
            if seen.insert(cs.name.clone(), ()).is_some() {
                return Err(TableError::DuplicateColumn { column: cs.name.clone() });
            }
            if col.len() != n_rows {
                return Err(TableError::LengthMismatch {
                    column: cs.name.clone(),
                    expected: n_rows,
                    actual: col.len(),
                });
            }
            if col.kind() != cs.kind {
                return Err(TableError::KindMismatch {
                    column: cs.name.clone(),
                    expected: cs.kind,
                    actual: col.kind(),
                });
            }
            if cs.role == ColumnRole::Key && cs.kind != FeatureKind::Nominal {
                return Err(TableError::NonNominalKey { column: cs.name.clone() });
            }
            match col {
                ColumnData::Nominal { codes, .. } => {
                    debug_assert!(codes.iter().all(|&c| c >= MISSING_CODE));
                }
                ColumnData::Numerical(values) => {
                    debug_assert!(values.iter().all(|v| v.is_nan() || v.is_finite()));
                }
            }
        }
        Ok(Self { schema, columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &ColumnData {
        &self.columns[idx]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn column_by_name(&self, name: &str) -> Result<&ColumnData, TableError> {
        self.column_index(name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| TableError::UnknownColumn { column: name.to_string() })
    }

    /// Index of the single target column.
    pub fn target_index(&self) -> Result<usize, TableError> {
        let targets: Vec<usize> = self
            .schema
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == ColumnRole::Target)
            .map(|(i, _)| i)
            .collect();
        match targets.as_slice() {
            [one] => Ok(*one),
            other => Err(TableError::TargetCount(other.len())),
        }
    }

    /// Target cells decoded as severity labels. Errors on missing cells or
    /// codes outside {0, 1, 2}.
    pub fn target_labels(&self) -> Result<Vec<ClassLabel>, TableError> {
        let idx = self.target_index()?;
        let codes = self.columns[idx].as_nominal().ok_or_else(|| TableError::KindMismatch {
            column: self.schema[idx].name.clone(),
            expected: FeatureKind::Nominal,
            actual: FeatureKind::Numerical,
        })?;
        codes
            .iter()
            .enumerate()
            .map(|(row, &code)| {
                ClassLabel::from_code(code).ok_or(TableError::InvalidTargetCode { row, code })
            })
            .collect()
    }

    /// Per-class counts of the target column.
    pub fn class_counts(&self) -> Result<[usize; ClassLabel::COUNT], TableError> {
        let mut counts = [0usize; ClassLabel::COUNT];
        for label in self.target_labels()? {
            counts[label.index()] += 1;
        }
        Ok(counts)
    }

    /// New table containing the given rows, in order. Indices may repeat.
    pub fn gather(&self, rows: &[usize]) -> DataTable {
        DataTable {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.gather(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    /// New table without the named columns. Unknown names are an error.
    pub fn drop_columns(&self, names: &[String]) -> Result<DataTable, TableError> {
        for name in names {
            if self.column_index(name).is_none() {
                return Err(TableError::UnknownColumn { column: name.clone() });
            }
        }
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&i| !names.iter().any(|n| *n == self.schema[i].name))
            .collect();
        Ok(self.select_columns(&keep))
    }

    /// New table with only the given column indices, in order.
    pub fn select_columns(&self, indices: &[usize]) -> DataTable {
        DataTable {
            schema: indices.iter().map(|&i| self.schema[i].clone()).collect(),
            columns: indices.iter().map(|&i| self.columns[i].clone()).collect(),
            n_rows: self.n_rows,
        }
    }

    /// Replaces one column's data in a copy of the table.
    pub fn with_column(&self, idx: usize, data: ColumnData) -> Result<DataTable, TableError> {
        let mut out = self.clone();
        if data.len() != self.n_rows {
            return Err(TableError::LengthMismatch {
                column: self.schema[idx].name.clone(),
                expected: self.n_rows,
                actual: data.len(),
            });
        }
        if data.kind() != self.schema[idx].kind {
            return Err(TableError::KindMismatch {
                column: self.schema[idx].name.clone(),
                expected: self.schema[idx].kind,
                actual: data.kind(),
            });
        }
        out.columns[idx] = data;
        Ok(out)
    }

    /// Rows with no missing cell in any column.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n_rows)
            .filter(|&r| !self.columns.iter().any(|c| c.is_missing(r)))
            .collect()
    }

    /// Total number of missing cells.
    pub fn missing_cells(&self) -> usize {
        self.columns.iter().map(ColumnData::missing_count).sum()
    }

    /// Deterministic shuffled split into (train, rest) of sizes
    /// `⌊n·fraction⌋` and `n − ⌊n·fraction⌋`.
    pub fn split(
        &self,
        train_fraction: f64,
        seed: u64,
    ) -> Result<(DataTable, DataTable), TableError> {
        split::split(self, train_fraction, seed)
    }

    /// Cell-for-cell equality with missing == missing (derived `PartialEq`
    /// treats NaN cells as unequal, which is wrong for tables).
    pub fn cell_identical(&self, other: &DataTable) -> bool {
        if self.schema != other.schema || self.n_rows != other.n_rows {
            return false;
        }
        self.columns.iter().zip(&other.columns).all(|(a, b)| match (a, b) {
            (
                ColumnData::Nominal { codes: ca, labels: la },
                ColumnData::Nominal { codes: cb, labels: lb },
            ) => {
                ca.len() == cb.len()
                    && (0..ca.len()).all(|r| match (la, lb) {
                        (None, None) => ca[r] == cb[r],
                        _ => a.render(r) == b.render(r),
                    })
            }
            (ColumnData::Numerical(va), ColumnData::Numerical(vb)) => {
                va.len() == vb.len()
                    && va.iter().zip(vb).all(|(x, y)| {
                        (x.is_nan() && y.is_nan()) || x.to_bits() == y.to_bits()
                    })
            }
            _ => false,
        })
    }
}

#[cfg(test)]
mod tests;
