//! Synthetic data generation: single-table class blobs for model tests and
//! a full accidents/vehicles/casualties CSV triple with controllable
//! imbalance, injected missingness and a known label structure.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::table::{
    save_csv, save_schema_file, ClassLabel, ColumnData, ColumnRole, ColumnSchema, DataTable,
    Dictionary, FeatureKind, TableError, MISSING_CODE,
};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("class proportions must be positive and sum to 1 (got {0:?})")]
    InvalidProportions([f64; 3]),
    #[error("fixture needs at least {needed} rows, got {got}")]
    TooSmall { needed: usize, got: usize },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Largest-remainder apportionment of `n` rows to the class proportions;
/// every count is within one of `round(p * n)`.
pub fn class_counts_for(proportions: [f64; 3], n: usize) -> Result<[usize; 3], FixtureError> {
    let sum: f64 = proportions.iter().sum();
    if proportions.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-6 {
        return Err(FixtureError::InvalidProportions(proportions));
    }
    let exact: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let leftover = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b))
    });
    for k in 0..leftover {
        counts[order[k % 3]] += 1;
    }
    Ok(counts)
}

/// Gaussian class blobs over numeric features; `separation` is the distance
/// between class means in units of the within-class spread.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub counts: [usize; 3],
    pub n_features: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self { counts: [870, 120, 10], n_features: 4, separation: 3.0, seed: 0 }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Single-table fixture: rows in class-block order (shuffle via `split`).
pub fn severity_blobs(spec: &BlobSpec) -> DataTable {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.separation;
    // Class means spread along distinct directions.
    let center = |class: usize, feature: usize| -> f64 {
        match class {
            0 => 0.0,
            1 => {
                if feature.is_multiple_of(2) {
                    s
                } else {
                    -s
                }
            }
            _ => {
                if feature.is_multiple_of(3) {
                    -s
                } else {
                    s
                }
            }
        }
    };
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); spec.n_features];
    let mut labels: Vec<i64> = Vec::new();
    for (class, &count) in spec.counts.iter().enumerate() {
        for _ in 0..count {
            for (j, col) in cols.iter_mut().enumerate() {
                col.push(center(class, j) + standard_normal(&mut rng));
            }
            labels.push(class as i64);
        }
    }
    let mut schema: Vec<ColumnSchema> = (0..spec.n_features)
        .map(|j| ColumnSchema::feature(format!("F{j}"), FeatureKind::Numerical))
        .collect();
    schema.push(ColumnSchema::target("Casualty Severity"));
    let mut columns: Vec<ColumnData> = cols.into_iter().map(ColumnData::Numerical).collect();
    columns.push(ColumnData::Nominal { codes: labels, labels: None });
    DataTable::new(schema, columns).expect("blob fixture construction")
}

/// Settings of the CSV-triple generator.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub casualties: usize,
    pub proportions: [f64; 3],
    /// MCAR missingness rate on the optional feature columns.
    pub missing_rate: f64,
    /// Missingness rate on Eastings/Northings/Time (rows the cleaning stage
    /// later drops).
    pub required_missing_rate: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            casualties: 10_000,
            proportions: [0.8710, 0.1187, 0.0103],
            missing_rate: 0.15,
            required_missing_rate: 0.005,
            seed: 0,
        }
    }
}

/// The generated triple plus the complete (pre-masking) versions for
/// mask-and-recover checks.
#[derive(Debug, Clone)]
pub struct FixtureTables {
    pub accidents: DataTable,
    pub vehicles: DataTable,
    pub casualties: DataTable,
    pub accidents_complete: DataTable,
    pub vehicles_complete: DataTable,
    pub casualties_complete: DataTable,
}

struct ColumnBuilder {
    schema: Vec<ColumnSchema>,
    columns: Vec<ColumnData>,
}

impl ColumnBuilder {
    fn new() -> Self {
        Self { schema: Vec::new(), columns: Vec::new() }
    }

    fn nominal(&mut self, name: &str, role: ColumnRole, codes: Vec<i64>) {
        self.schema.push(ColumnSchema::new(name, FeatureKind::Nominal, role));
        self.columns.push(ColumnData::Nominal { codes, labels: None });
    }

    fn labeled(&mut self, name: &str, role: ColumnRole, cells: Vec<Option<String>>) {
        let mut dict = Dictionary::new();
        let codes =
            cells.into_iter().map(|c| c.map_or(MISSING_CODE, |t| dict.intern(&t))).collect();
        self.schema.push(ColumnSchema::new(name, FeatureKind::Nominal, role));
        self.columns.push(ColumnData::Nominal { codes, labels: Some(dict) });
    }

    fn numerical(&mut self, name: &str, role: ColumnRole, values: Vec<f64>) {
        self.schema.push(ColumnSchema::new(name, FeatureKind::Numerical, role));
        self.columns.push(ColumnData::Numerical(values));
    }

    fn build(self) -> Result<DataTable, TableError> {
        DataTable::new(self.schema, self.columns)
    }
}

/// Builds the in-memory triple. Accident risk drives both the severity
/// assignment and several accident-level features, so the label structure
/// is recoverable after the merge; casualty age adds a second signal.
pub fn generate_fixture_tables(spec: &FixtureSpec) -> Result<FixtureTables, FixtureError> {
    if spec.casualties < 10 {
        return Err(FixtureError::TooSmall { needed: 10, got: spec.casualties });
    }
    let counts = class_counts_for(spec.proportions, spec.casualties)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let n_cas = spec.casualties;
    let n_acc = (n_cas / 2).max(1);

    // Accident-level latent risk in [0, 1).
    let risk: Vec<f64> = (0..n_acc).map(|_| rng.gen_range(0.0..1.0)).collect();

    // Vehicles: 1..=3 per accident.
    let mut veh_acc: Vec<usize> = Vec::new();
    let mut veh_ref: Vec<i64> = Vec::new();
    for (a, _) in risk.iter().enumerate() {
        let k = rng.gen_range(1..=3usize);
        for v in 0..k {
            veh_acc.push(a);
            veh_ref.push(v as i64 + 1);
        }
    }

    // Casualty -> vehicle assignment.
    let cas_vehicle: Vec<usize> = (0..n_cas).map(|_| rng.gen_range(0..veh_acc.len())).collect();

    // Severity: the most severe classes land on the riskiest accidents.
    // Rank casualties by their accident's risk (ties by index), assign
    // fatal to the top of the ranking, then serious, then slight, and keep
    // casualty order otherwise.
    let mut ranked: Vec<usize> = (0..n_cas).collect();
    ranked.sort_by(|&a, &b| {
        risk[veh_acc[cas_vehicle[b]]]
            .total_cmp(&risk[veh_acc[cas_vehicle[a]]])
            .then(a.cmp(&b))
    });
    let mut severity = vec![0i64; n_cas];
    for (rank, &cas) in ranked.iter().enumerate() {
        severity[cas] = if rank < counts[2] {
            ClassLabel::Fatal.code()
        } else if rank < counts[2] + counts[1] {
            ClassLabel::Serious.code()
        } else {
            ClassLabel::Slight.code()
        };
    }

    // ---- accidents ----
    let mut acc = ColumnBuilder::new();
    acc.nominal("Accident Index", ColumnRole::Key, (0..n_acc as i64).map(|i| i + 1).collect());
    acc.numerical(
        "Location Easting OSGR",
        ColumnRole::Feature,
        (0..n_acc).map(|_| (rng.gen_range(100_000.0..660_000.0f64)).round()).collect(),
    );
    acc.numerical(
        "Location Northing OSGR",
        ColumnRole::Feature,
        (0..n_acc).map(|_| (rng.gen_range(10_000.0..1_200_000.0f64)).round()).collect(),
    );
    let dates: Vec<Option<String>> = (0..n_acc)
        .map(|_| {
            Some(format!(
                "{:02}/{:02}/{}",
                rng.gen_range(1..=28),
                rng.gen_range(1..=12),
                rng.gen_range(2005..=2018)
            ))
        })
        .collect();
    acc.labeled("Date", ColumnRole::Dropped, dates);
    let times: Vec<Option<String>> = (0..n_acc)
        .map(|_| Some(format!("{:02}:{:02}", rng.gen_range(0..24), rng.gen_range(0..60))))
        .collect();
    acc.labeled("Time", ColumnRole::Dropped, times);
    // Higher risk -> higher speed limit.
    acc.numerical(
        "Speed Limit",
        ColumnRole::Feature,
        risk.iter().map(|r| 20.0 + 10.0 * ((r * 4.0).floor() + f64::from(rng.gen_range(0..2u8))).min(5.0)).collect(),
    );
    acc.numerical(
        "Number of Vehicles",
        ColumnRole::Feature,
        (0..n_acc).map(|a| veh_acc.iter().filter(|&&x| x == a).count() as f64).collect(),
    );
    acc.nominal(
        "Light Conditions",
        ColumnRole::Feature,
        risk.iter().map(|r| if *r > 0.7 { rng.gen_range(4..=6) } else { 1 }).collect(),
    );
    acc.nominal(
        "Weather Conditions",
        ColumnRole::Feature,
        (0..n_acc)
            .map(|_| {
                
                rng.gen_range(1..=9i64) // 9 doubles as the "unknown" code recoded downstream
            })
            .collect(),
    );
    acc.nominal(
        "Urban or Rural Area",
        ColumnRole::Feature,
        (0..n_acc).map(|_| if rng.gen_bool(0.04) { 3 } else { rng.gen_range(1..=2) }).collect(),
    );
    let junction_detail: Vec<i64> =
        (0..n_acc).map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..=8) }).collect();
    acc.nominal("Junction Detail", ColumnRole::Feature, junction_detail.clone());
    // Structurally missing when there is no junction; the cleaning rule
    // fills these with the explicit "not at junction" code.
    acc.nominal(
        "Junction Control",
        ColumnRole::Feature,
        junction_detail
            .iter()
            .map(|&jd| if jd == 0 { MISSING_CODE } else { rng.gen_range(1..=4) })
            .collect(),
    );
    acc.nominal(
        "2nd Road Class",
        ColumnRole::Feature,
        junction_detail
            .iter()
            .map(|&jd| if jd == 0 { MISSING_CODE } else { rng.gen_range(1..=6) })
            .collect(),
    );
    let accidents_complete = acc.build()?;

    // ---- vehicles ----
    let n_veh = veh_acc.len();
    let mut veh = ColumnBuilder::new();
    veh.nominal(
        "Accident Index",
        ColumnRole::Key,
        veh_acc.iter().map(|&a| a as i64 + 1).collect(),
    );
    veh.nominal("Vehicle Reference", ColumnRole::Key, veh_ref.clone());
    // 1 bicycle, 2-5 motorcycles, 9 car, 11 bus, 16 horse, 18 tram, 19 van.
    let vehicle_type: Vec<i64> = (0..n_veh)
        .map(|_| *[1i64, 2, 3, 9, 9, 9, 9, 9, 11, 19, 16, 18].choose(&mut rng).unwrap())
        .collect();
    veh.nominal("Vehicle Type", ColumnRole::Feature, vehicle_type.clone());
    let two_wheeled = |t: i64| matches!(t, 1 | 2 | 3 | 4 | 5 | 22 | 23);
    veh.nominal(
        "Towing and Articulation",
        ColumnRole::Feature,
        vehicle_type
            .iter()
            .map(|&t| if two_wheeled(t) { MISSING_CODE } else { rng.gen_range(0..=5) })
            .collect(),
    );
    let no_handedness = |t: i64| matches!(t, 1 | 2 | 3 | 4 | 5 | 16 | 18 | 23);
    veh.nominal(
        "Was Vehicle Left Hand Drive?",
        ColumnRole::Feature,
        vehicle_type
            .iter()
            .map(|&t| if no_handedness(t) { MISSING_CODE } else { rng.gen_range(1..=2) })
            .collect(),
    );
    veh.nominal(
        "Vehicle Manoeuvre",
        ColumnRole::Feature,
        (0..n_veh).map(|_| rng.gen_range(1..=18)).collect(),
    );
    veh.nominal(
        "Sex of Driver",
        ColumnRole::Feature,
        (0..n_veh).map(|_| if rng.gen_bool(0.05) { 3 } else { rng.gen_range(1..=2) }).collect(),
    );
    let driver_age: Vec<f64> = (0..n_veh).map(|_| rng.gen_range(17.0..90.0f64).round()).collect();
    veh.numerical("Age of Driver", ColumnRole::Feature, driver_age.clone());
    veh.numerical(
        "Age of Vehicle",
        ColumnRole::Feature,
        (0..n_veh).map(|_| rng.gen_range(0.0..25.0f64).round()).collect(),
    );
    veh.nominal(
        "Driver Home Area Type",
        ColumnRole::Feature,
        (0..n_veh).map(|_| rng.gen_range(1..=3)).collect(),
    );
    let vehicles_complete = veh.build()?;

    // ---- casualties ----
    let mut cas = ColumnBuilder::new();
    cas.nominal(
        "Accident Index",
        ColumnRole::Key,
        cas_vehicle.iter().map(|&v| veh_acc[v] as i64 + 1).collect(),
    );
    cas.nominal(
        "Vehicle Reference",
        ColumnRole::Key,
        cas_vehicle.iter().map(|&v| veh_ref[v]).collect(),
    );
    let casualty_class: Vec<i64> = (0..n_cas).map(|_| rng.gen_range(1..=3)).collect();
    cas.nominal("Casualty Class", ColumnRole::Feature, casualty_class.clone());
    cas.nominal(
        "Sex of Casualty",
        ColumnRole::Feature,
        (0..n_cas).map(|_| if rng.gen_bool(0.05) { 9 } else { rng.gen_range(1..=2) }).collect(),
    );
    // Older casualties skew toward severe outcomes: a second, casualty-level
    // signal alongside accident risk.
    cas.numerical(
        "Age of Casualty",
        ColumnRole::Feature,
        severity
            .iter()
            .map(|&s| {
                let base = 20.0 + 15.0 * s as f64;
                (base + standard_normal(&mut rng).abs() * 20.0).clamp(1.0, 95.0).round()
            })
            .collect(),
    );
    // Missing for bus/van casualty types; the cleaning rule fills 0.
    let casualty_type: Vec<i64> = (0..n_cas)
        .map(|i| {
            if casualty_class[i] == 3 {
                0 // pedestrian
            } else {
                *[1i64, 9, 9, 9, 10, 11, 19].choose(&mut rng).unwrap()
            }
        })
        .collect();
    cas.nominal(
        "Car Passenger",
        ColumnRole::Feature,
        casualty_type
            .iter()
            .map(|&t| if matches!(t, 10 | 11 | 19) { MISSING_CODE } else { rng.gen_range(0..=2) })
            .collect(),
    );
    cas.nominal("Casualty Type", ColumnRole::Feature, casualty_type);
    cas.nominal("Casualty Severity", ColumnRole::Target, severity);
    let casualties_complete = cas.build()?;

    // ---- missingness injection ----
    let mut mask_rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(spec.seed, 0xBAD));
    let optional_missing = [
        "Speed Limit",
        "Weather Conditions",
        "Light Conditions",
        "Urban or Rural Area",
        "Vehicle Manoeuvre",
        "Age of Driver",
        "Age of Vehicle",
        "Driver Home Area Type",
        "Age of Casualty",
    ];
    let required_missing = ["Location Easting OSGR", "Location Northing OSGR", "Time"];
    let mask = |table: &DataTable, rng: &mut ChaCha8Rng| -> Result<DataTable, FixtureError> {
        let mut out = table.clone();
        for (name, rate) in optional_missing
            .iter()
            .map(|n| (*n, spec.missing_rate))
            .chain(required_missing.iter().map(|n| (*n, spec.required_missing_rate)))
        {
            let Some(idx) = out.column_index(name) else { continue };
            let col = match out.column(idx).clone() {
                ColumnData::Numerical(mut values) => {
                    for v in values.iter_mut() {
                        if rng.gen_bool(rate) {
                            *v = f64::NAN;
                        }
                    }
                    ColumnData::Numerical(values)
                }
                ColumnData::Nominal { mut codes, labels } => {
                    for c in codes.iter_mut() {
                        if rng.gen_bool(rate) {
                            *c = MISSING_CODE;
                        }
                    }
                    ColumnData::Nominal { codes, labels }
                }
            };
            out = out.with_column(idx, col)?;
        }
        Ok(out)
    };
    let accidents = mask(&accidents_complete, &mut mask_rng)?;
    let vehicles = mask(&vehicles_complete, &mut mask_rng)?;
    let casualties = mask(&casualties_complete, &mut mask_rng)?;

    Ok(FixtureTables {
        accidents,
        vehicles,
        casualties,
        accidents_complete,
        vehicles_complete,
        casualties_complete,
    })
}

/// Default cleaning plan matching the fixture's columns.
pub const FIXTURE_CLEANING_PLAN: &str = r#"# cleaning plan for the synthetic fixture
drop "Accident Index"
drop "Vehicle Reference"

recode "Weather Conditions" 9 -> -1
recode "Urban or Rural Area" 3 -> -1
recode "Sex of Driver" 3 -> -1
recode "Sex of Casualty" 9 -> -1

rule car_passenger: if "Car Passenger" = missing and "Casualty Type" in {10,11,19} then "Car Passenger" := 0
rule no_towing: if "Towing and Articulation" = missing and "Vehicle Type" in {1,2,3,4,5,22,23} then "Towing and Articulation" := 0
rule lhd_unknown: if "Was Vehicle Left Hand Drive?" = missing and "Vehicle Type" in {1,2,3,4,5,16,18,23} then "Was Vehicle Left Hand Drive?" := 9
rule junction_control: if "Junction Detail" = 0 and "Junction Control" = missing then "Junction Control" := 0
rule second_road_class: if "Junction Detail" = 0 and "2nd Road Class" = missing then "2nd Road Class" := 0
rule driver_age: if "Casualty Class" = 1 and "Age of Driver" = missing and "Age of Casualty" != missing then "Age of Driver" := col("Age of Casualty")
rule casualty_age: if "Casualty Class" = 1 and "Age of Casualty" = missing and "Age of Driver" != missing then "Age of Casualty" := col("Age of Driver")
rule daylight: if "Light Conditions" = missing and "Time" in [06:00, 18:00) then "Light Conditions" := 1

require "Location Easting OSGR"
require "Location Northing OSGR"
require "Time"
"#;

/// Default imputation plan matching the fixture's columns.
pub const FIXTURE_IMPUTE_PLAN: &str = r#"# imputation stages for the synthetic fixture
stage 1: "Speed Limit", "Weather Conditions"
stage 2: "Junction Control", "2nd Road Class"
stage 3: "Towing and Articulation", "Was Vehicle Left Hand Drive?", "Vehicle Manoeuvre", "Sex of Driver", "Age of Driver", "Car Passenger", "Sex of Casualty", "Age of Casualty", "Urban or Rural Area", "Light Conditions"
stage 4: "Age of Vehicle", "Driver Home Area Type"
"#;

/// Paths of everything [`write_fixture`] emits.
#[derive(Debug, Clone)]
pub struct FixtureArtifacts {
    pub accidents_csv: PathBuf,
    pub vehicles_csv: PathBuf,
    pub casualties_csv: PathBuf,
    pub accidents_schema: PathBuf,
    pub vehicles_schema: PathBuf,
    pub casualties_schema: PathBuf,
    pub cleaning_plan: PathBuf,
    pub impute_plan: PathBuf,
    pub truth_dir: PathBuf,
}

/// Generates the triple and writes CSVs, schema files, plan files and the
/// complete (pre-masking) truth copies under `dir`.
pub fn write_fixture(spec: &FixtureSpec, dir: impl AsRef<Path>) -> Result<FixtureArtifacts, FixtureError> {
    let dir = dir.as_ref();
    let io = |e: std::io::Error| FixtureError::Io { path: dir.display().to_string(), source: e };
    std::fs::create_dir_all(dir).map_err(io)?;
    let tables = generate_fixture_tables(spec)?;

    let artifacts = FixtureArtifacts {
        accidents_csv: dir.join("accidents.csv"),
        vehicles_csv: dir.join("vehicles.csv"),
        casualties_csv: dir.join("casualties.csv"),
        accidents_schema: dir.join("accidents.schema"),
        vehicles_schema: dir.join("vehicles.schema"),
        casualties_schema: dir.join("casualties.schema"),
        cleaning_plan: dir.join("cleaning.plan"),
        impute_plan: dir.join("impute.plan"),
        truth_dir: dir.join("truth"),
    };
    save_csv(&tables.accidents, &artifacts.accidents_csv)?;
    save_csv(&tables.vehicles, &artifacts.vehicles_csv)?;
    save_csv(&tables.casualties, &artifacts.casualties_csv)?;
    save_schema_file(tables.accidents.schema(), &artifacts.accidents_schema)?;
    save_schema_file(tables.vehicles.schema(), &artifacts.vehicles_schema)?;
    save_schema_file(tables.casualties.schema(), &artifacts.casualties_schema)?;
    std::fs::write(&artifacts.cleaning_plan, FIXTURE_CLEANING_PLAN).map_err(io)?;
    std::fs::write(&artifacts.impute_plan, FIXTURE_IMPUTE_PLAN).map_err(io)?;
    std::fs::create_dir_all(&artifacts.truth_dir).map_err(io)?;
    save_csv(&tables.accidents_complete, artifacts.truth_dir.join("accidents.csv"))?;
    save_csv(&tables.vehicles_complete, artifacts.truth_dir.join("vehicles.csv"))?;
    save_csv(&tables.casualties_complete, artifacts.truth_dir.join("casualties.csv"))?;
    Ok(artifacts)
}
