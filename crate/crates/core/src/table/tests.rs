use std::fs;

use super::*;

fn nominal(codes: &[i64]) -> ColumnData {
    ColumnData::Nominal { codes: codes.to_vec(), labels: None }
}

fn numerical(values: &[f64]) -> ColumnData {
    ColumnData::Numerical(values.to_vec())
}

fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path
}

#[test]
fn load_counts_empty_numeric_cell_as_missing() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "t.csv", "Age,Speed\n1,30\n2,\n3,50\n");
    let schema = vec![
        ColumnSchema::feature("Age", FeatureKind::Nominal),
        ColumnSchema::feature("Speed", FeatureKind::Numerical),
    ];
    let table = load_csv(&path, &schema).unwrap();
    assert_eq!(table.n_rows(), 3);
    assert_eq!(table.missing_cells(), 1);
    assert!(table.column(1).is_missing(1));
}

#[test]
fn load_rejects_text_in_nominal_feature() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "t.csv", "Age\nabc\n");
    let schema = vec![ColumnSchema::feature("Age", FeatureKind::Nominal)];
    match load_csv(&path, &schema) {
        Err(TableError::TypeParse { row, column, .. }) => {
            assert_eq!(row, 1);
            assert_eq!(column, "Age");
        }
        other => panic!("expected TypeParse, got {other:?}"),
    }
}

#[test]
fn load_rejects_unknown_and_duplicate_headers() {
    let dir = tempfile::tempdir().unwrap();
    let schema = vec![ColumnSchema::feature("A", FeatureKind::Nominal)];
    let path = write_file(&dir, "u.csv", "A,B\n1,2\n");
    assert!(matches!(
        load_csv(&path, &schema),
        Err(TableError::UnknownColumn { column }) if column == "B"
    ));
    let path = write_file(&dir, "d.csv", "A,A\n1,2\n");
    assert!(matches!(load_csv(&path, &schema), Err(TableError::DuplicateColumn { .. })));
}

#[test]
fn literal_minus_one_is_missing_for_both_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "t.csv", "N,X\n-1,-1\n2,3.5\n");
    let schema = vec![
        ColumnSchema::feature("N", FeatureKind::Nominal),
        ColumnSchema::feature("X", FeatureKind::Numerical),
    ];
    let table = load_csv(&path, &schema).unwrap();
    assert!(table.column(0).is_missing(0));
    assert!(table.column(1).is_missing(0));
    assert_eq!(table.column(0).as_nominal().unwrap()[1], 2);
    assert_eq!(table.column(1).as_numerical().unwrap()[1], 3.5);
}

#[test]
fn key_columns_accept_text_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_file(&dir, "t.csv", "Accident Index\n2015X001\n2015X002\n-1\n");
    let schema = vec![ColumnSchema::key("Accident Index")];
    let table = load_csv(&path, &schema).unwrap();
    let col = table.column(0);
    assert_eq!(col.render(0), "2015X001");
    assert_eq!(col.render(2), MISSING_TOKEN);
    assert!(col.labels().is_some());
}

#[test]
fn save_then_load_round_trips_cells() {
    let dir = tempfile::tempdir().unwrap();
    let schema = vec![
        ColumnSchema::key("Id"),
        ColumnSchema::feature("Code", FeatureKind::Nominal),
        ColumnSchema::feature("Value", FeatureKind::Numerical),
    ];
    let path = write_file(&dir, "t.csv", "Id,Code,Value\nA1,4,0.25\nA2,-1,\nA3,7,12\n");
    let table = load_csv(&path, &schema).unwrap();
    let out = dir.path().join("out.csv");
    save_csv(&table, &out).unwrap();
    let again = load_csv(&out, &schema).unwrap();
    for col in 0..table.n_cols() {
        for row in 0..table.n_rows() {
            assert_eq!(table.column(col).render(row), again.column(col).render(row));
        }
    }
    // Saving the reloaded table reproduces the file byte for byte.
    let out2 = dir.path().join("out2.csv");
    save_csv(&again, &out2).unwrap();
    assert_eq!(fs::read(&out).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn schema_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let schema = vec![
        ColumnSchema::key("Accident Index"),
        ColumnSchema::feature("Speed Limit", FeatureKind::Numerical),
        ColumnSchema::target("Casualty Severity"),
        ColumnSchema::new("Date", FeatureKind::Nominal, ColumnRole::Dropped),
    ];
    let path = dir.path().join("t.schema");
    save_schema_file(&schema, &path).unwrap();
    assert_eq!(load_schema_file(&path).unwrap(), schema);
}

// Hand-built merge fixture: 2 accidents, 3 vehicles, 4 casualties.
//
// accidents: AI=10 (Road=1), AI=20 (Road=2)
// vehicles:  (10,1,Type=5), (10,2,Type=6), (20,1,Type=7)
// casualties: (10,1,Sev=0), (10,2,Sev=1), (20,1,Sev=2), (10,1,Sev=0)
fn merge_fixture() -> (DataTable, DataTable, DataTable) {
    let accidents = DataTable::new(
        vec![
            ColumnSchema::key("Accident Index"),
            ColumnSchema::feature("Road", FeatureKind::Nominal),
        ],
        vec![nominal(&[10, 20]), nominal(&[1, 2])],
    )
    .unwrap();
    let vehicles = DataTable::new(
        vec![
            ColumnSchema::key("Accident Index"),
            ColumnSchema::key("Vehicle Reference"),
            ColumnSchema::feature("Vehicle Type", FeatureKind::Nominal),
        ],
        vec![nominal(&[10, 10, 20]), nominal(&[1, 2, 1]), nominal(&[5, 6, 7])],
    )
    .unwrap();
    let casualties = DataTable::new(
        vec![
            ColumnSchema::key("Accident Index"),
            ColumnSchema::key("Vehicle Reference"),
            ColumnSchema::target("Casualty Severity"),
        ],
        vec![nominal(&[10, 10, 20, 10]), nominal(&[1, 2, 1, 1]), nominal(&[0, 1, 2, 0])],
    )
    .unwrap();
    (accidents, vehicles, casualties)
}

#[test]
fn merge_joins_each_casualty_to_its_vehicle_and_accident() {
    let (a, v, c) = merge_fixture();
    let (merged, report) = merge_datasets(&a, &v, &c).unwrap();
    assert_eq!(merged.n_rows(), 4);
    assert_eq!(report.orphan_count(), 0);
    // Hand-traced join: casualty rows hit vehicles (10,1), (10,2), (20,1), (10,1).
    let veh_type = merged.column_by_name("Vehicle Type").unwrap().as_nominal().unwrap();
    assert_eq!(veh_type, &[5, 6, 7, 5]);
    let road = merged.column_by_name("Road").unwrap().as_nominal().unwrap();
    assert_eq!(road, &[1, 1, 2, 1]);
    let sev = merged.column_by_name("Casualty Severity").unwrap().as_nominal().unwrap();
    assert_eq!(sev, &[0, 1, 2, 0]);
}

#[test]
fn merge_column_count_drops_three_duplicated_keys() {
    let (a, v, c) = merge_fixture();
    let (merged, _) = merge_datasets(&a, &v, &c).unwrap();
    assert_eq!(merged.n_cols(), a.n_cols() + v.n_cols() + c.n_cols() - 3);
}

#[test]
fn merge_excludes_and_reports_orphans() {
    let (a, v, mut_c) = merge_fixture();
    // Point the last casualty at a vehicle reference that does not exist.
    let mut codes = mut_c.column(1).as_nominal().unwrap().to_vec();
    codes[3] = 9;
    let c = mut_c.with_column(1, nominal(&codes)).unwrap();
    let (merged, report) = merge_datasets(&a, &v, &c).unwrap();
    assert_eq!(merged.n_rows(), 3);
    assert_eq!(report.orphan_count(), 1);
    assert_eq!(report.orphans[0].casualty_row, 3);
    assert_eq!(report.orphans[0].vehicle_key, "9");
    // Cardinality: |out| + |orphans| = |casualties|.
    assert_eq!(merged.n_rows() + report.orphan_count(), c.n_rows());
}

#[test]
fn merge_rejects_duplicate_accident_keys() {
    let (mut_a, v, c) = merge_fixture();
    let a = mut_a.with_column(0, nominal(&[10, 10])).unwrap();
    assert!(matches!(merge_datasets(&a, &v, &c), Err(TableError::DuplicateKey { .. })));
}

#[test]
fn split_sizes_match_75_25() {
    let schema = vec![ColumnSchema::feature("X", FeatureKind::Numerical)];
    let table =
        DataTable::new(schema, vec![numerical(&(0..100).map(f64::from).collect::<Vec<_>>())])
            .unwrap();
    let (train, val) = table.split(0.75, 7).unwrap();
    assert_eq!((train.n_rows(), val.n_rows()), (75, 25));
}

#[test]
fn split_is_a_partition() {
    let schema = vec![ColumnSchema::feature("X", FeatureKind::Numerical)];
    let table =
        DataTable::new(schema, vec![numerical(&(0..100).map(f64::from).collect::<Vec<_>>())])
            .unwrap();
    let (train, val) = table.split(0.5, 3).unwrap();
    let mut all: Vec<f64> = train.column(0).as_numerical().unwrap().to_vec();
    all.extend_from_slice(val.column(0).as_numerical().unwrap());
    all.sort_by(f64::total_cmp);
    let expect: Vec<f64> = (0..100).map(f64::from).collect();
    assert_eq!(all, expect);
}

#[test]
fn split_deterministic_per_seed() {
    let schema = vec![ColumnSchema::feature("X", FeatureKind::Numerical)];
    let values: Vec<f64> = (0..1000).map(f64::from).collect();
    let table = DataTable::new(schema, vec![numerical(&values)]).unwrap();
    let (a1, _) = table.split(0.75, 42).unwrap();
    let (a2, _) = table.split(0.75, 42).unwrap();
    assert_eq!(a1.column(0).as_numerical().unwrap(), a2.column(0).as_numerical().unwrap());
    let (b, _) = table.split(0.75, 43).unwrap();
    assert_ne!(a1.column(0).as_numerical().unwrap(), b.column(0).as_numerical().unwrap());
}

#[test]
fn split_guards() {
    let schema = vec![ColumnSchema::feature("X", FeatureKind::Numerical)];
    let empty = DataTable::new(schema.clone(), vec![numerical(&[])]).unwrap();
    assert!(matches!(empty.split(0.5, 0), Err(TableError::EmptyTable)));
    let table = DataTable::new(schema, vec![numerical(&[1.0, 2.0])]).unwrap();
    assert!(matches!(table.split(1.0, 0), Err(TableError::BadFraction(_))));
}

#[test]
fn target_labels_decode_and_validate() {
    let table = DataTable::new(
        vec![ColumnSchema::target("Casualty Severity")],
        vec![nominal(&[0, 1, 2, 0])],
    )
    .unwrap();
    assert_eq!(
        table.target_labels().unwrap(),
        vec![ClassLabel::Slight, ClassLabel::Serious, ClassLabel::Fatal, ClassLabel::Slight]
    );
    assert_eq!(table.class_counts().unwrap(), [2, 1, 1]);
    let bad = DataTable::new(
        vec![ColumnSchema::target("Casualty Severity")],
        vec![nominal(&[0, 5])],
    )
    .unwrap();
    assert!(matches!(bad.target_labels(), Err(TableError::InvalidTargetCode { row: 1, code: 5 })));
}
