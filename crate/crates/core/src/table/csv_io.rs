//! CSV and schema-file I/O.
//!
//! Dialect: UTF-8, comma delimiter, first row is the header, fields quoted
//! when necessary. Empty cells and the literal token `-1` load as the
//! missing marker for both column kinds.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{
    ColumnData, ColumnRole, ColumnSchema, DataTable, Dictionary, FeatureKind, TableError,
    MISSING_CODE, MISSING_TOKEN,
};

fn io_err(path: &Path, source: std::io::Error) -> TableError {
    TableError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path, source: csv::Error) -> TableError {
    TableError::Csv { path: path.display().to_string(), source }
}

/// Raw cells of one nominal column, collected before deciding whether the
/// column is integer-coded or needs a dictionary.
enum PendingColumn {
    Nominal(Vec<Option<String>>),
    Numerical(Vec<f64>),
}

/// Loads a CSV file against a declared schema.
///
/// The header must contain exactly the schema's column names (any order);
/// output columns follow schema declaration order. A nominal column whose
/// non-missing tokens all parse as integers `>= -1` keeps those integers as
/// codes; otherwise every distinct token is dictionary-encoded in
/// first-occurrence order.
pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSchema]) -> Result<DataTable, TableError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;

    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut header_pos: Vec<Option<usize>> = vec![None; schema.len()];
    for (file_idx, name) in headers.iter().enumerate() {
        match schema.iter().position(|c| c.name == name) {
            Some(schema_idx) => {
                if header_pos[schema_idx].is_some() {
                    return Err(TableError::DuplicateColumn { column: name.to_string() });
                }
                header_pos[schema_idx] = Some(file_idx);
            }
            None => return Err(TableError::UnknownColumn { column: name.to_string() }),
        }
    }
    let positions: Vec<usize> = schema
        .iter()
        .zip(&header_pos)
        .map(|(c, pos)| pos.ok_or_else(|| TableError::UnknownColumn { column: c.name.clone() }))
        .collect::<Result<_, _>>()?;

    let mut pending: Vec<PendingColumn> = schema
        .iter()
        .map(|c| match c.kind {
            FeatureKind::Nominal => PendingColumn::Nominal(Vec::new()),
            FeatureKind::Numerical => PendingColumn::Numerical(Vec::new()),
        })
        .collect();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        for (schema_idx, cs) in schema.iter().enumerate() {
            let raw = record.get(positions[schema_idx]).unwrap_or("").trim();
            let missing = raw.is_empty() || raw == MISSING_TOKEN;
            match &mut pending[schema_idx] {
                PendingColumn::Nominal(cells) => {
                    cells.push(if missing { None } else { Some(raw.to_string()) });
                }
                PendingColumn::Numerical(values) => {
                    if missing {
                        values.push(f64::NAN);
                    } else {
                        // Parse errors report 1-based data rows.
                        let v: f64 = raw.parse().map_err(|_| TableError::TypeParse {
                            row: row_idx + 1,
                            column: cs.name.clone(),
                            kind: cs.kind,
                            value: raw.to_string(),
                        })?;
                        if !v.is_finite() {
                            return Err(TableError::TypeParse {
                                row: row_idx + 1,
                                column: cs.name.clone(),
                                kind: cs.kind,
                                value: raw.to_string(),
                            });
                        }
                        // -1 is reserved as the missing sentinel across kinds.
                        values.push(if v == -1.0 { f64::NAN } else { v });
                    }
                }
            }
        }
    }

    let columns = pending
        .into_iter()
        .zip(schema)
        .map(|(col, cs)| match col {
            PendingColumn::Numerical(values) => Ok(ColumnData::Numerical(values)),
            PendingColumn::Nominal(cells) => finalize_nominal(cells, cs),
        })
        .collect::<Result<Vec<_>, _>>()?;

    DataTable::new(schema.to_vec(), columns)
}

/// Feature and target columns must be integer-coded; key and dropped
/// columns (identifiers, raw timestamps) fall back to dictionary encoding
/// when any token is not an integer, so assigned codes cannot collide with
/// literal integers from the same column.
fn finalize_nominal(cells: Vec<Option<String>>, cs: &ColumnSchema) -> Result<ColumnData, TableError> {
    let bad = cells
        .iter()
        .enumerate()
        .find(|(_, c)| {
            c.as_ref()
                .is_some_and(|tok| !matches!(tok.parse::<i64>(), Ok(code) if code >= MISSING_CODE))
        })
        .map(|(row, c)| (row, c.clone().unwrap()));
    match bad {
        None => {
            let codes = cells
                .into_iter()
                .map(|c| c.map_or(MISSING_CODE, |tok| tok.parse::<i64>().unwrap()))
                .collect();
            Ok(ColumnData::Nominal { codes, labels: None })
        }
        Some((row, value)) => {
            if matches!(cs.role, ColumnRole::Feature | ColumnRole::Target) {
                return Err(TableError::TypeParse {
                    row: row + 1,
                    column: cs.name.clone(),
                    kind: cs.kind,
                    value,
                });
            }
            let mut dict = Dictionary::new();
            let codes = cells
                .into_iter()
                .map(|c| c.map_or(MISSING_CODE, |tok| dict.intern(&tok)))
                .collect();
            Ok(ColumnData::Nominal { codes, labels: Some(dict) })
        }
    }
}

/// Writes the table in the canonical CSV form `load_csv` parses.
pub fn save_csv(table: &DataTable, path: impl AsRef<Path>) -> Result<(), TableError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
        }
    }
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    writer
        .write_record(table.schema().iter().map(|c| c.name.as_str()))
        .map_err(|e| csv_err(path, e))?;
    for row in 0..table.n_rows() {
        writer
            .write_record(table.columns().iter().map(|c| c.render(row)))
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Reads a schema file: one `name,kind,role` line per column, `#` comments.
///
/// Names may contain commas only if the kind/role fields stay last, so the
/// line is split from the right.
pub fn load_schema_file(path: impl AsRef<Path>) -> Result<Vec<ColumnSchema>, TableError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut schema = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.rsplitn(3, ',');
        let role_tok = parts.next().unwrap_or("").trim();
        let kind_tok = parts.next().unwrap_or("").trim();
        let name = parts.next().unwrap_or("").trim();
        if name.is_empty() {
            return Err(TableError::SchemaFile {
                line: idx + 1,
                reason: "expected `name,kind,role`".to_string(),
            });
        }
        let kind = match kind_tok {
            "nominal" => FeatureKind::Nominal,
            "numerical" => FeatureKind::Numerical,
            other => {
                return Err(TableError::SchemaFile {
                    line: idx + 1,
                    reason: format!("unknown kind `{other}`"),
                })
            }
        };
        let role = match role_tok {
            "feature" => ColumnRole::Feature,
            "target" => ColumnRole::Target,
            "key" => ColumnRole::Key,
            "dropped" => ColumnRole::Dropped,
            other => {
                return Err(TableError::SchemaFile {
                    line: idx + 1,
                    reason: format!("unknown role `{other}`"),
                })
            }
        };
        schema.push(ColumnSchema::new(name, kind, role));
    }
    Ok(schema)
}

/// Writes a schema file in the format `load_schema_file` reads.
pub fn save_schema_file(schema: &[ColumnSchema], path: impl AsRef<Path>) -> Result<(), TableError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
        }
    }
    let mut out = String::new();
    for c in schema {
        out.push_str(&format!("{},{},{}\n", c.name, c.kind, c.role));
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| io_err(path, e))?;
    Ok(())
}
