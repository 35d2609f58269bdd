//! Keyed merge of the three source datasets.
//!
//! Each casualty row is joined to its vehicle via (accident key, vehicle
//! key), then to its accident via the accident key. Hash join on the
//! rendered key strings; output row order is casualty input order.

use std::collections::HashMap;

use super::{ColumnData, ColumnRole, DataTable, TableError};

/// Keys of a casualty row that matched no vehicle or accident.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrphanKey {
    pub casualty_row: usize,
    pub accident_key: String,
    pub vehicle_key: String,
}

/// Outcome counts of a merge.
#[derive(Debug, Clone, Default)]
pub struct MergeReport {
    pub output_rows: usize,
    pub orphans: Vec<OrphanKey>,
}

impl MergeReport {
    pub fn orphan_count(&self) -> usize {
        self.orphans.len()
    }
}

fn key_columns(table: &DataTable) -> Vec<&str> {
    table
        .schema()
        .iter()
        .filter(|c| c.role == ColumnRole::Key)
        .map(|c| c.name.as_str())
        .collect()
}

fn require_key<'t>(
    table: &'t DataTable,
    table_name: &str,
    column: &str,
) -> Result<&'t ColumnData, TableError> {
    table.column_index(column).map(|i| table.column(i)).ok_or_else(|| {
        TableError::MissingKeyColumn { table: table_name.to_string(), column: column.to_string() }
    })
}

/// Joins casualties to vehicles on (accident key, vehicle key) and the
/// result to accidents on the accident key.
///
/// The accident key is the single `Key` column of `accidents`; the vehicle
/// key is the other `Key` column of `vehicles`. Output columns are all
/// accident columns, vehicle columns minus the accident key, and casualty
/// columns minus both keys, so the output width is |A| + |V| + |C| − 3.
/// Casualties whose keys resolve to no vehicle or accident are excluded and
/// listed in the report. Pedestrian rows join through the vehicle reference
/// stored on the casualty row (the vehicle recorded as causing the injury).
pub fn merge_datasets(
    accidents: &DataTable,
    vehicles: &DataTable,
    casualties: &DataTable,
) -> Result<(DataTable, MergeReport), TableError> {
    let acc_keys = key_columns(accidents);
    let [acc_key] = acc_keys.as_slice() else {
        return Err(TableError::MissingKeyColumn {
            table: "accidents".to_string(),
            column: "<single key role column>".to_string(),
        });
    };
    let acc_key = acc_key.to_string();
    let veh_key = key_columns(vehicles)
        .into_iter()
        .find(|&n| n != acc_key)
        .ok_or_else(|| TableError::MissingKeyColumn {
            table: "vehicles".to_string(),
            column: "<vehicle key role column>".to_string(),
        })?
        .to_string();

    let acc_col = require_key(accidents, "accidents", &acc_key)?;
    let veh_acc_col = require_key(vehicles, "vehicles", &acc_key)?;
    let veh_key_col = require_key(vehicles, "vehicles", &veh_key)?;
    let cas_acc_col = require_key(casualties, "casualties", &acc_key)?;
    let cas_veh_col = require_key(casualties, "casualties", &veh_key)?;

    let mut acc_by_key: HashMap<String, usize> = HashMap::with_capacity(accidents.n_rows());
    for row in 0..accidents.n_rows() {
        let key = acc_col.render(row);
        if acc_by_key.insert(key.clone(), row).is_some() {
            return Err(TableError::DuplicateKey { table: "accidents".to_string(), key });
        }
    }
    let mut veh_by_key: HashMap<(String, String), usize> =
        HashMap::with_capacity(vehicles.n_rows());
    for row in 0..vehicles.n_rows() {
        let key = (veh_acc_col.render(row), veh_key_col.render(row));
        if veh_by_key.insert(key.clone(), row).is_some() {
            return Err(TableError::DuplicateKey {
                table: "vehicles".to_string(),
                key: format!("({}, {})", key.0, key.1),
            });
        }
    }

    let mut acc_rows = Vec::with_capacity(casualties.n_rows());
    let mut veh_rows = Vec::with_capacity(casualties.n_rows());
    let mut cas_rows = Vec::with_capacity(casualties.n_rows());
    let mut report = MergeReport::default();
    for row in 0..casualties.n_rows() {
        let accident_key = cas_acc_col.render(row);
        let vehicle_key = cas_veh_col.render(row);
        let veh_row = veh_by_key.get(&(accident_key.clone(), vehicle_key.clone())).copied();
        let acc_row = acc_by_key.get(&accident_key).copied();
        match (acc_row, veh_row) {
            (Some(a), Some(v)) => {
                acc_rows.push(a);
                veh_rows.push(v);
                cas_rows.push(row);
            }
            _ => report.orphans.push(OrphanKey { casualty_row: row, accident_key, vehicle_key }),
        }
    }
    report.output_rows = cas_rows.len();

    let mut schema = Vec::new();
    let mut columns = Vec::new();
    for (i, cs) in accidents.schema().iter().enumerate() {
        schema.push(cs.clone());
        columns.push(accidents.column(i).gather(&acc_rows));
    }
    for (i, cs) in vehicles.schema().iter().enumerate() {
        if cs.name == acc_key {
            continue;
        }
        schema.push(cs.clone());
        columns.push(vehicles.column(i).gather(&veh_rows));
    }
    for (i, cs) in casualties.schema().iter().enumerate() {
        if cs.name == acc_key || cs.name == veh_key {
            continue;
        }
        schema.push(cs.clone());
        columns.push(casualties.column(i).gather(&cas_rows));
    }

    let merged = DataTable::new(schema, columns)?;
    Ok((merged, report))
}
