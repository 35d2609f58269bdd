//! Date/Time expansion into Hour, Month and Year model features.

use crate::table::{ColumnData, ColumnSchema, DataTable, FeatureKind};

use super::CleanError;

/// Strict `HH:MM` parse to minutes since midnight.
pub fn parse_hhmm(text: &str) -> Option<u32> {
    let (h, m) = text.split_once(':')?;
    if h.is_empty() || h.len() > 2 || m.len() != 2 {
        return None;
    }
    let hours: u32 = h.parse().ok()?;
    let minutes: u32 = m.parse().ok()?;
    if hours > 23 || minutes > 59 {
        return None;
    }
    Some(hours * 60 + minutes)
}

/// Strict `DD/MM/YYYY` parse to (day, month, year).
fn parse_date(text: &str) -> Option<(u32, u32, u32)> {
    let mut parts = text.split('/');
    let day: u32 = parts.next()?.parse().ok()?;
    let month: u32 = parts.next()?.parse().ok()?;
    let year: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || day == 0 || day > 31 || month == 0 || month > 12 {
        return None;
    }
    Some((day, month, year))
}

/// Replaces the `Date` (`DD/MM/YYYY`) and `Time` (`HH:MM`) columns with
/// numerical feature columns Hour, Month and Year.
///
/// Missing timestamps yield missing derived cells; malformed ones abort
/// with the 0-based row index.
pub fn expand_time(table: &DataTable) -> Result<DataTable, CleanError> {
    expand_time_named(table, "Date", "Time")
}

/// As [`expand_time`] with configurable source column names.
pub fn expand_time_named(
    table: &DataTable,
    date_column: &str,
    time_column: &str,
) -> Result<DataTable, CleanError> {
    let date_col = table.column_by_name(date_column)?;
    let time_col = table.column_by_name(time_column)?;

    let n = table.n_rows();
    let mut hour = Vec::with_capacity(n);
    let mut month = Vec::with_capacity(n);
    let mut year = Vec::with_capacity(n);
    for row in 0..n {
        if time_col.is_missing(row) {
            hour.push(f64::NAN);
        } else {
            let text = time_col.render(row);
            let minutes = parse_hhmm(&text)
                .ok_or(CleanError::MalformedTimestamp { row, value: text })?;
            hour.push(f64::from(minutes / 60));
        }
        if date_col.is_missing(row) {
            month.push(f64::NAN);
            year.push(f64::NAN);
        } else {
            let text = date_col.render(row);
            let (_, m, y) =
                parse_date(&text).ok_or(CleanError::MalformedTimestamp { row, value: text })?;
            month.push(f64::from(m));
            year.push(f64::from(y));
        }
    }

    let table = table.drop_columns(&[date_column.to_string(), time_column.to_string()])?;
    let mut schema = table.schema().to_vec();
    let mut columns = table.columns().to_vec();
    for (name, values) in [("Hour", hour), ("Month", month), ("Year", year)] {
        schema.push(ColumnSchema::feature(name, FeatureKind::Numerical));
        columns.push(ColumnData::Numerical(values));
    }
    Ok(DataTable::new(schema, columns)?)
}
