use super::*;
use crate::table::{ColumnRole, ColumnSchema, Dictionary, FeatureKind};

fn nominal(codes: &[i64]) -> ColumnData {
    ColumnData::Nominal { codes: codes.to_vec(), labels: None }
}

fn numerical(values: &[f64]) -> ColumnData {
    ColumnData::Numerical(values.to_vec())
}

fn labeled(cells: &[Option<&str>]) -> ColumnData {
    let mut dict = Dictionary::new();
    let codes = cells.iter().map(|c| c.map_or(MISSING_CODE, |tok| dict.intern(tok))).collect();
    ColumnData::Nominal { codes, labels: Some(dict) }
}

/// Four-row table exercising the shipped rule families.
fn fixture() -> DataTable {
    DataTable::new(
        vec![
            ColumnSchema::feature("Casualty Type", FeatureKind::Nominal),
            ColumnSchema::feature("Car Passenger", FeatureKind::Nominal),
            ColumnSchema::feature("Casualty Class", FeatureKind::Nominal),
            ColumnSchema::feature("Age of Driver", FeatureKind::Numerical),
            ColumnSchema::feature("Age of Casualty", FeatureKind::Numerical),
            ColumnSchema::feature("Light Conditions", FeatureKind::Nominal),
            ColumnSchema::new("Time", FeatureKind::Nominal, ColumnRole::Dropped),
            ColumnSchema::feature("Sex of Driver", FeatureKind::Nominal),
            ColumnSchema::feature("Noise", FeatureKind::Nominal),
        ],
        vec![
            nominal(&[11, 9, 9, 11]),
            nominal(&[-1, 1, -1, 2]),
            nominal(&[2, 1, 1, 2]),
            numerical(&[40.0, f64::NAN, 30.0, 25.0]),
            numerical(&[12.0, 35.0, f64::NAN, 60.0]),
            nominal(&[-1, 4, -1, -1]),
            labeled(&[Some("14:30"), Some("22:10"), None, Some("05:59")]),
            nominal(&[1, 3, 2, 3]),
            nominal(&[7, 7, 7, 7]),
        ],
    )
    .unwrap()
}

const PLAN_TEXT: &str = r#"
# drops and recodes
drop Noise
recode "Sex of Driver" 3 -> -1

# rule families
rule bus_not_car: if "Car Passenger" = missing and "Casualty Type" in {10,11,19} then "Car Passenger" := 0
rule driver_age: if "Casualty Class" = 1 and "Age of Driver" = missing and "Age of Casualty" != missing then "Age of Driver" := col("Age of Casualty")
rule casualty_age: if "Casualty Class" = 1 and "Age of Casualty" = missing then "Age of Casualty" := col("Age of Driver")
rule daylight: if "Light Conditions" = missing and "Time" in [06:00, 18:00) then "Light Conditions" := 1
"#;

#[test]
fn plan_parses_all_directive_forms() {
    let plan = CleaningPlan::parse(PLAN_TEXT).unwrap();
    assert_eq!(plan.drop_columns, vec!["Noise"]);
    assert_eq!(plan.recode_unknown, vec![("Sex of Driver".to_string(), 3)]);
    assert_eq!(plan.domain_rules.len(), 4);
    let daylight = &plan.domain_rules[3];
    assert_eq!(
        daylight.guards[1],
        Guard::TimeWindow { column: "Time".into(), start_minutes: 360, end_minutes: 1080 }
    );
    assert_eq!(daylight.assignment, Assignment::Code { column: "Light Conditions".into(), code: 1 });
    let cross = &plan.domain_rules[1];
    assert_eq!(
        cross.assignment,
        Assignment::CopyFrom { column: "Age of Driver".into(), source: "Age of Casualty".into() }
    );
}

#[test]
fn plan_rejects_missing_assignment_and_bad_recode() {
    assert!(matches!(
        CleaningPlan::parse("rule r: if A = 1 then B := -1"),
        Err(CleanError::PlanParse { .. })
    ));
    assert!(matches!(
        CleaningPlan::parse("recode A 3 -> 0"),
        Err(CleanError::PlanParse { .. })
    ));
    assert!(matches!(CleaningPlan::parse("frobnicate A"), Err(CleanError::PlanParse { .. })));
}

#[test]
fn bus_passenger_rule_fills_not_car_passenger() {
    let (out, report) = apply_cleaning(&fixture(), &CleaningPlan::parse(PLAN_TEXT).unwrap()).unwrap();
    let car = out.column_by_name("Car Passenger").unwrap().as_nominal().unwrap();
    // Rows 0 and 3 are bus-type casualties; only row 0 was missing.
    assert_eq!(car, &[0, 1, -1, 2]);
    assert_eq!(report.rule_changes[0], ("bus_not_car".to_string(), 1));
}

#[test]
fn daylight_rule_checks_time_window() {
    let (out, _) = apply_cleaning(&fixture(), &CleaningPlan::parse(PLAN_TEXT).unwrap()).unwrap();
    let light = out.column_by_name("Light Conditions").unwrap().as_nominal().unwrap();
    // Row 0: missing at 14:30 -> daylight. Row 2: missing time -> untouched.
    // Row 3: 05:59 outside the window -> untouched.
    assert_eq!(light, &[1, 4, -1, -1]);
}

#[test]
fn cross_fill_copies_between_driver_and_casualty() {
    let (out, _) = apply_cleaning(&fixture(), &CleaningPlan::parse(PLAN_TEXT).unwrap()).unwrap();
    let drv = out.column_by_name("Age of Driver").unwrap().as_numerical().unwrap();
    let cas = out.column_by_name("Age of Casualty").unwrap().as_numerical().unwrap();
    assert_eq!(drv[1], 35.0); // filled from casualty age
    assert_eq!(cas[2], 30.0); // filled from driver age
    assert_eq!(drv[0], 40.0); // class 2: rule does not fire
}

#[test]
fn recode_rewrites_unknown_codes_to_missing() {
    let (out, report) = apply_cleaning(&fixture(), &CleaningPlan::parse(PLAN_TEXT).unwrap()).unwrap();
    let sex = out.column_by_name("Sex of Driver").unwrap().as_nominal().unwrap();
    assert_eq!(sex, &[1, -1, 2, -1]);
    assert_eq!(report.recoded_cells[0], ("Sex of Driver".to_string(), 2));
}

#[test]
fn empty_rule_plan_is_identity_modulo_drops() {
    let plan = CleaningPlan::parse("drop Noise\n").unwrap();
    let table = fixture();
    let (out, report) = apply_cleaning(&table, &plan).unwrap();
    assert_eq!(out.n_cols(), table.n_cols() - 1);
    assert_eq!(out.n_rows(), table.n_rows());
    assert!(report.rule_changes.is_empty());
    assert_eq!(report.rows_dropped, 0);
    let same_cols = table.drop_columns(&["Noise".to_string()]).unwrap();
    assert!(out.cell_identical(&same_cols));
}

#[test]
fn require_present_drops_rows() {
    let plan = CleaningPlan::parse("require Time\n").unwrap();
    let (out, report) = apply_cleaning(&fixture(), &plan).unwrap();
    assert_eq!(out.n_rows(), 3);
    assert_eq!(report.rows_dropped, 1);
}

#[test]
fn cleaning_is_idempotent_on_fill_plans() {
    let plan = CleaningPlan::parse(PLAN_TEXT).unwrap();
    let (once, _) = apply_cleaning(&fixture(), &plan).unwrap();
    // Re-running needs the dropped column gone from the plan too.
    let replan = CleaningPlan { drop_columns: vec![], ..plan };
    let (twice, report) = apply_cleaning(&once, &replan).unwrap();
    assert!(once.cell_identical(&twice));
    assert!(report.rule_changes.iter().all(|(_, n)| *n == 0));
}

#[test]
fn rules_never_blank_present_cells() {
    // Recodes rewrite unknown codes to missing; the monotone-missingness
    // guarantee covers the domain rules, so run those alone.
    let full = CleaningPlan::parse(PLAN_TEXT).unwrap();
    let plan = CleaningPlan {
        drop_columns: vec![],
        recode_unknown: vec![],
        require_present: vec![],
        ..full
    };
    let table = fixture();
    let (out, _) = apply_cleaning(&table, &plan).unwrap();
    for cs in out.schema() {
        let before = table.column_by_name(&cs.name).unwrap();
        let after = out.column_by_name(&cs.name).unwrap();
        for row in 0..out.n_rows() {
            if !before.is_missing(row) {
                assert!(!after.is_missing(row), "{} row {row} went missing", cs.name);
            }
        }
    }
}

#[test]
fn plan_validation_errors() {
    let overlap = CleaningPlan::parse("drop A\nrule r: if A = 1 then B := 2\n").unwrap();
    assert!(matches!(
        apply_cleaning(&fixture(), &overlap),
        Err(CleanError::DropRuleOverlap { .. })
    ));
    let missing = CleaningPlan::parse("rule r: if Nope = 1 then Noise := 2\n").unwrap();
    assert!(matches!(
        apply_cleaning(&fixture(), &missing),
        Err(CleanError::RuleColumnMissing { rule, .. }) if rule == "r"
    ));
}

#[test]
fn expand_time_parses_and_replaces_columns() {
    let table = DataTable::new(
        vec![
            ColumnSchema::new("Date", FeatureKind::Nominal, ColumnRole::Dropped),
            ColumnSchema::new("Time", FeatureKind::Nominal, ColumnRole::Dropped),
        ],
        vec![
            labeled(&[Some("13/02/2015"), Some("01/12/2008"), None]),
            labeled(&[Some("09:45"), Some("23:59"), Some("00:00")]),
        ],
    )
    .unwrap();
    let out = expand_time(&table).unwrap();
    assert!(out.column_index("Date").is_none());
    assert!(out.column_index("Time").is_none());
    assert_eq!(out.column_by_name("Hour").unwrap().as_numerical().unwrap(), &[9.0, 23.0, 0.0]);
    let month = out.column_by_name("Month").unwrap().as_numerical().unwrap();
    assert_eq!(&month[..2], &[2.0, 12.0]);
    assert!(month[2].is_nan());
    assert_eq!(&out.column_by_name("Year").unwrap().as_numerical().unwrap()[..2], &[2015.0, 2008.0]);
}

#[test]
fn expand_time_rejects_out_of_range() {
    let table = DataTable::new(
        vec![
            ColumnSchema::new("Date", FeatureKind::Nominal, ColumnRole::Dropped),
            ColumnSchema::new("Time", FeatureKind::Nominal, ColumnRole::Dropped),
        ],
        vec![labeled(&[Some("13/02/2015")]), labeled(&[Some("25:00")])],
    )
    .unwrap();
    assert!(matches!(
        expand_time(&table),
        Err(CleanError::MalformedTimestamp { row: 0, value }) if value == "25:00"
    ));
}

#[test]
fn parse_hhmm_bounds() {
    assert_eq!(parse_hhmm("00:00"), Some(0));
    assert_eq!(parse_hhmm("23:59"), Some(23 * 60 + 59));
    assert_eq!(parse_hhmm("24:00"), None);
    assert_eq!(parse_hhmm("12:60"), None);
    assert_eq!(parse_hhmm("9:05"), Some(545));
    assert_eq!(parse_hhmm("junk"), None);
}
