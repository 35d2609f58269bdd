//! Stage orchestration: each stage reads and writes CSV artifacts (plus a
//! sibling `.schema` file), so any stage can be re-run in isolation; a full
//! `run` chains merge -> clean -> analyze -> impute -> split -> [smote] ->
//! train -> evaluate and records every artifact hash in a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::assoc::{build_report, AssociationConfig};
use crate::clean::{apply_cleaning, expand_time_named, CleanError, CleaningPlan};
use crate::eval::{evaluate, EvalError};
use crate::forest::{missforest_impute, ForestConfig, ForestError, ImputationPlan};
use crate::neural::{
    load_checkpoint, save_checkpoint, Encoder, InitScheme, NeuralError, NominalEncoding,
    OptimizerKind, TrainConfig,
};
use crate::resample::{class_weights, ClassWeights, ResampleError, SmoteConfig};
use crate::rl::{train_rl, AgentHyperparameters, RlError};
use crate::table::{
    load_csv, load_schema_file, merge_datasets, save_csv, save_schema_file, DataTable, TableError,
};

mod config;
mod manifest;

pub use config::{preset, ConfigFile, PRESET_NAMES};
pub use manifest::{sha256_file, ArtifactKind, Manifest, ManifestEntry};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config parse error at line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("config is missing [{section}] {key}")]
    MissingKey { section: String, key: String },
    #[error("bad value for [{section}] {key}: `{value}`")]
    BadValue { section: String, key: String, value: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: &'static str, source: Box<PipelineError> },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Clean(#[from] CleanError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PipelineError {
    fn in_stage(self, stage: &'static str) -> PipelineError {
        PipelineError::Stage { stage, source: Box::new(self) }
    }

    /// True when the failure is a malformed-input kind of error rather than
    /// a stage blowing up mid-run (drives the CLI exit code).
    pub fn is_data_error(&self) -> bool {
        match self {
            PipelineError::Stage { source, .. } => source.is_data_error(),
            PipelineError::Config { .. }
            | PipelineError::MissingKey { .. }
            | PipelineError::BadValue { .. }
            | PipelineError::UnknownPreset(_)
            | PipelineError::Table(_)
            | PipelineError::Clean(CleanError::PlanParse { .. })
            | PipelineError::Forest(ForestError::PlanParse { .. }) => true,
            _ => false,
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| PipelineError::Io { path: path.display().to_string(), source: e })?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| PipelineError::Io { path: path.display().to_string(), source: e })
}

/// CSV artifact + sibling schema file.
pub fn load_table(csv: &Path) -> Result<DataTable, PipelineError> {
    let schema = load_schema_file(csv.with_extension("schema"))?;
    Ok(load_csv(csv, &schema)?)
}

pub fn save_table(table: &DataTable, csv: &Path) -> Result<(), PipelineError> {
    save_csv(table, csv)?;
    save_schema_file(table.schema(), csv.with_extension("schema"))?;
    Ok(())
}

/// Source file triple for the merge stage.
#[derive(Debug, Clone)]
pub struct MergeInputs {
    pub accidents: PathBuf,
    pub accidents_schema: PathBuf,
    pub vehicles: PathBuf,
    pub vehicles_schema: PathBuf,
    pub casualties: PathBuf,
    pub casualties_schema: PathBuf,
}

/// Joins the three source files and writes `merged.csv` plus a report.
pub fn stage_merge(inputs: &MergeInputs, out_dir: &Path) -> Result<PathBuf, PipelineError> {
    let accidents = load_csv(&inputs.accidents, &load_schema_file(&inputs.accidents_schema)?)?;
    let vehicles = load_csv(&inputs.vehicles, &load_schema_file(&inputs.vehicles_schema)?)?;
    let casualties = load_csv(&inputs.casualties, &load_schema_file(&inputs.casualties_schema)?)?;
    let (merged, report) = merge_datasets(&accidents, &vehicles, &casualties)?;
    let out_csv = out_dir.join("merged.csv");
    save_table(&merged, &out_csv)?;
    let mut text = format!(
        "rows: {}\ncolumns: {}\norphans: {}\n",
        merged.n_rows(),
        merged.n_cols(),
        report.orphan_count()
    );
    for orphan in report.orphans.iter().take(50) {
        text.push_str(&format!(
            "orphan casualty row {} (accident {}, vehicle {})\n",
            orphan.casualty_row, orphan.accident_key, orphan.vehicle_key
        ));
    }
    write_text(&out_dir.join("merge_report.txt"), &text)?;
    Ok(out_csv)
}

/// Applies the cleaning plan and (optionally) Date/Time expansion.
pub fn stage_clean(
    input_csv: &Path,
    plan_path: &Path,
    expand_time: bool,
    date_column: &str,
    time_column: &str,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let table = load_table(input_csv)?;
    let plan = CleaningPlan::load(plan_path)?;
    let (cleaned, report) = apply_cleaning(&table, &plan)?;
    let cleaned = if expand_time {
        expand_time_named(&cleaned, date_column, time_column)?
    } else {
        cleaned
    };
    let out_csv = out_dir.join("clean.csv");
    save_table(&cleaned, &out_csv)?;
    write_text(&out_dir.join("cleaning_report.csv"), &report.to_csv())?;
    let incomplete = cleaned.n_rows() - cleaned.complete_rows().len();
    let share = if cleaned.n_rows() > 0 {
        100.0 * incomplete as f64 / cleaned.n_rows() as f64
    } else {
        0.0
    };
    write_text(
        &out_dir.join("completeness.txt"),
        &format!(
            "rows: {}\ncolumns: {}\nincomplete_rows: {incomplete}\nincomplete_share_percent: {share:.4}\n",
            cleaned.n_rows(),
            cleaned.n_cols(),
        ),
    )?;
    Ok(out_csv)
}

/// Association metrics, importance ranking and prune candidates.
pub fn stage_analyze(
    input_csv: &Path,
    threshold: f64,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let table = load_table(input_csv)?;
    let report = build_report(&table, &AssociationConfig { high_correlation_threshold: threshold })?;
    write_text(&out_dir.join("association.csv"), &report.to_csv())?;
    write_text(&out_dir.join("importance.txt"), &report.summary())?;
    let pruned_path = out_dir.join("pruned.txt");
    write_text(&pruned_path, &(report.pruned_columns().join("\n") + "\n"))?;
    Ok(pruned_path)
}

/// Staged MissForest imputation.
pub fn stage_impute(
    input_csv: &Path,
    plan_path: &Path,
    forest: ForestConfig,
    max_iterations: usize,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let table = load_table(input_csv)?;
    let mut plan = ImputationPlan::load(plan_path)?;
    plan.forest = forest;
    plan.max_iterations = max_iterations;
    let (imputed, report) = missforest_impute(&table, &plan)?;
    let out_csv = out_dir.join("imputed.csv");
    save_table(&imputed, &out_csv)?;
    write_text(&out_dir.join("imputation_report.csv"), &report.to_csv())?;
    Ok(out_csv)
}

/// Model-ready split: optional prune-list application and complete-rows
/// filter, then the deterministic 75/25-style shuffle split.
pub fn stage_split(
    input_csv: &Path,
    train_fraction: f64,
    seed: u64,
    complete_rows_only: bool,
    prune_file: Option<&Path>,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), PipelineError> {
    let mut table = load_table(input_csv)?;
    if let Some(prune) = prune_file {
        let text = std::fs::read_to_string(prune)
            .map_err(|e| PipelineError::Io { path: prune.display().to_string(), source: e })?;
        let drops: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && table.column_index(l).is_some())
            .map(str::to_string)
            .collect();
        table = table.drop_columns(&drops)?;
    }
    if complete_rows_only {
        table = table.gather(&table.complete_rows());
    }
    let (train, val) = table.split(train_fraction, seed)?;
    let train_csv = out_dir.join("train.csv");
    let val_csv = out_dir.join("val.csv");
    save_table(&train, &train_csv)?;
    save_table(&val, &val_csv)?;
    Ok((train_csv, val_csv))
}

/// SMOTE-equalizes the training artifact.
pub fn stage_smote(
    train_csv: &Path,
    k_neighbors: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let table = load_table(train_csv)?;
    let counts = table.class_counts()?;
    let config = SmoteConfig::equalize(&counts, k_neighbors, seed);
    let resampled = crate::resample::smote(&table, &config)?;
    let out_csv = out_dir.join("train_resampled.csv");
    save_table(&resampled, &out_csv)?;
    Ok(out_csv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainKind {
    Ann,
    Logreg,
    Dqn,
}

impl TrainKind {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "ann" => Some(TrainKind::Ann),
            "logreg" => Some(TrainKind::Logreg),
            "dqn" => Some(TrainKind::Dqn),
            _ => None,
        }
    }
}

/// How the supervised class weights are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightsMode {
    /// N / (K * n_c) from the training class counts.
    Formula,
    Unit,
    Explicit([f64; 3]),
}

impl WeightsMode {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "formula" => Some(WeightsMode::Formula),
            "none" | "unit" => Some(WeightsMode::Unit),
            other => {
                let parts: Vec<f64> =
                    other.split(',').filter_map(|p| p.trim().parse().ok()).collect();
                (parts.len() == 3).then(|| WeightsMode::Explicit([parts[0], parts[1], parts[2]]))
            }
        }
    }

    fn resolve(&self, train: &DataTable) -> Result<ClassWeights, PipelineError> {
        Ok(match self {
            WeightsMode::Formula => class_weights(&train.class_counts()?)?,
            WeightsMode::Unit => ClassWeights::uniform(),
            WeightsMode::Explicit([s, se, f]) => ClassWeights::explicit(*s, *se, *f),
        })
    }
}

/// Supervised training stage (ANN or logistic regression). Writes the
/// checkpoint, the encoder and the per-epoch log.
#[allow(clippy::too_many_arguments)]
pub fn stage_train_supervised(
    kind: TrainKind,
    train_csv: &Path,
    val_csv: &Path,
    config: &TrainConfig,
    weights: &WeightsMode,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let train = load_table(train_csv)?;
    let val = load_table(val_csv)?;
    let config = TrainConfig { class_weights: weights.resolve(&train)?, ..config.clone() };
    let (classifier, log) = match kind {
        TrainKind::Ann => crate::neural::train_supervised(&train, &val, &config)?,
        TrainKind::Logreg => crate::neural::train_logreg(&train, &val, &config)?,
        TrainKind::Dqn => unreachable!("dqn goes through stage_train_dqn"),
    };
    let model_path = out_dir.join("model.mlp");
    save_checkpoint(&classifier.model, &model_path)?;
    classifier.encoder.save(out_dir.join("encoder.txt"))?;
    write_text(&out_dir.join("training_log.csv"), &log.to_csv())?;
    Ok(model_path)
}

/// Deep-Q training stage. Writes the agent directory (both networks,
/// counters, replay memory), the encoder and the episode log.
pub fn stage_train_dqn(
    train_csv: &Path,
    hidden: &[usize],
    hyper: &AgentHyperparameters,
    episodes: usize,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let train = load_table(train_csv)?;
    let mut hyper = hyper.clone();
    if hyper.epsilon_decay_steps == 0 {
        hyper.epsilon_decay_steps = 10 * train.n_rows();
    }
    let (trained, log) = train_rl(&train, hidden, &hyper, episodes)?;
    let agent_dir = out_dir.join("dqn");
    trained.agent.save(&agent_dir)?;
    trained.encoder.save(out_dir.join("encoder.txt"))?;
    write_text(&out_dir.join("rl_log.csv"), &log.to_csv())?;
    Ok(agent_dir)
}

/// Scores a trained model on a held-out artifact: writes predictions plus
/// the confusion-matrix report.
pub fn stage_evaluate(
    kind: TrainKind,
    model_dir: &Path,
    test_csv: &Path,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let test = load_table(test_csv)?;
    let encoder = Encoder::load(model_dir.join("encoder.txt"))?;
    let features = encoder.encode(&test)?;
    let predictions: Vec<usize> = match kind {
        TrainKind::Ann | TrainKind::Logreg => {
            let model = load_checkpoint(model_dir.join("model.mlp"))?;
            model.predict_classes(&features)?
        }
        TrainKind::Dqn => {
            let target = load_checkpoint(model_dir.join("dqn").join("target.mlp"))?;
            crate::rl::rl_predict(&target, &features)?
        }
    };
    let truth: Vec<i64> = test.target_labels()?.iter().map(|l| l.code()).collect();
    let pred_codes: Vec<i64> = predictions.iter().map(|&p| p as i64).collect();
    let report = evaluate(&pred_codes, &truth)?;

    let mut pred_text = String::from("Prediction\n");
    for p in &pred_codes {
        pred_text.push_str(&format!("{p}\n"));
    }
    write_text(&out_dir.join("predictions.csv"), &pred_text)?;
    let report_path = out_dir.join("evaluation.csv");
    write_text(&report_path, &report.to_csv())?;
    write_text(&out_dir.join("evaluation.txt"), &report.summary())?;
    Ok(report_path)
}

/// Everything a full `run` produced.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub out_dir: PathBuf,
    pub evaluation: Option<PathBuf>,
}

/// Runs every enabled stage in order, hashing inputs and outputs into
/// `manifest.csv`. A stage failure aborts the run (earlier artifacts
/// remain) and names the stage.
pub fn run_pipeline(cfg: &ConfigFile, out_dir: &Path) -> Result<RunOutputs, PipelineError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| PipelineError::Io { path: out_dir.display().to_string(), source: e })?;
    let mut manifest = Manifest::new(out_dir);
    let mut current: Option<PathBuf> = None;

    // merge
    if cfg.has_section("merge") {
        let started = Instant::now();
        let inputs = MergeInputs {
            accidents: cfg.require("merge", "accidents")?.into(),
            accidents_schema: cfg.require("merge", "accidents_schema")?.into(),
            vehicles: cfg.require("merge", "vehicles")?.into(),
            vehicles_schema: cfg.require("merge", "vehicles_schema")?.into(),
            casualties: cfg.require("merge", "casualties")?.into(),
            casualties_schema: cfg.require("merge", "casualties_schema")?.into(),
        };
        for p in [&inputs.accidents, &inputs.vehicles, &inputs.casualties] {
            manifest.record("merge", ArtifactKind::Input, p, 0)?;
        }
        let merged =
            stage_merge(&inputs, out_dir).map_err(|e| e.in_stage("merge"))?;
        manifest.record("merge", ArtifactKind::Output, &merged, 0)?;
        manifest.note_timing("merge", started.elapsed().as_millis());
        current = Some(merged);
    } else if let Some(input) = cfg.get("pipeline", "input") {
        current = Some(PathBuf::from(input));
    }

    // clean
    if cfg.has_section("clean") {
        let started = Instant::now();
        let input = current.clone().ok_or(PipelineError::MissingKey {
            section: "clean".to_string(),
            key: "input (no prior stage output)".to_string(),
        })?;
        let plan: PathBuf = cfg.require("clean", "plan")?.into();
        let expand = cfg.get_bool("clean", "expand_time", true)?;
        let date_column = cfg.get("clean", "date_column").unwrap_or("Date").to_string();
        let time_column = cfg.get("clean", "time_column").unwrap_or("Time").to_string();
        manifest.record("clean", ArtifactKind::Input, &input, 0)?;
        manifest.record("clean", ArtifactKind::Input, &plan, 0)?;
        let cleaned =
            stage_clean(&input, &plan, expand, &date_column, &time_column, out_dir)
                .map_err(|e| e.in_stage("clean"))?;
        manifest.record("clean", ArtifactKind::Output, &cleaned, 0)?;
        manifest.note_timing("clean", started.elapsed().as_millis());
        current = Some(cleaned);
    }

    let input_for = |section: &str, current: &Option<PathBuf>| -> Result<PathBuf, PipelineError> {
        current.clone().ok_or(PipelineError::MissingKey {
            section: section.to_string(),
            key: "input (no prior stage output)".to_string(),
        })
    };

    // analyze
    let mut prune_file: Option<PathBuf> = None;
    if cfg.has_section("analyze") && cfg.get_bool("analyze", "enabled", true)? {
        let started = Instant::now();
        let input = input_for("analyze", &current)?;
        let threshold = cfg.get_f64("analyze", "threshold", 0.7)?;
        manifest.record("analyze", ArtifactKind::Input, &input, 0)?;
        let pruned =
            stage_analyze(&input, threshold, out_dir).map_err(|e| e.in_stage("analyze"))?;
        manifest.record("analyze", ArtifactKind::Output, &pruned, 0)?;
        manifest.note_timing("analyze", started.elapsed().as_millis());
        prune_file = Some(pruned);
    }

    // impute
    if cfg.has_section("impute") && cfg.get_bool("impute", "enabled", true)? {
        let started = Instant::now();
        let input = input_for("impute", &current)?;
        let plan: PathBuf = cfg.require("impute", "plan")?.into();
        let seed = cfg.get_u64("impute", "seed", 11)?;
        let forest = ForestConfig {
            n_trees: cfg.get_usize("impute", "trees", 100)?,
            min_leaf: cfg.get_usize("impute", "min_leaf", 5)?,
            seed,
            ..ForestConfig::default()
        };
        let max_iterations = cfg.get_usize("impute", "max_iterations", 10)?;
        manifest.record("impute", ArtifactKind::Input, &input, seed)?;
        manifest.record("impute", ArtifactKind::Input, &plan, seed)?;
        let imputed = stage_impute(&input, &plan, forest, max_iterations, out_dir)
            .map_err(|e| e.in_stage("impute"))?;
        manifest.record("impute", ArtifactKind::Output, &imputed, seed)?;
        manifest.note_timing("impute", started.elapsed().as_millis());
        current = Some(imputed);
    }

    // split
    let started = Instant::now();
    let input = input_for("split", &current)?;
    let fraction = cfg.get_f64("split", "train_fraction", 0.75)?;
    let split_seed = cfg.get_u64("split", "seed", 5)?;
    let complete_only = cfg.get_bool("train", "complete_rows_only", false)?;
    let apply_prune = cfg.get_bool("train", "apply_prune", true)?;
    manifest.record("split", ArtifactKind::Input, &input, split_seed)?;
    let (mut train_csv, val_csv) = stage_split(
        &input,
        fraction,
        split_seed,
        complete_only,
        if apply_prune { prune_file.as_deref() } else { None },
        out_dir,
    )
    .map_err(|e| e.in_stage("split"))?;
    manifest.record("split", ArtifactKind::Output, &train_csv, split_seed)?;
    manifest.record("split", ArtifactKind::Output, &val_csv, split_seed)?;
    manifest.note_timing("split", started.elapsed().as_millis());

    // smote (training part only; the validation artifact stays untouched)
    if cfg.has_section("smote") && cfg.get_bool("smote", "enabled", true)? {
        let started = Instant::now();
        let k = cfg.get_usize("smote", "k", 3)?;
        let seed = cfg.get_u64("smote", "seed", 13)?;
        manifest.record("smote", ArtifactKind::Input, &train_csv, seed)?;
        let resampled =
            stage_smote(&train_csv, k, seed, out_dir).map_err(|e| e.in_stage("smote"))?;
        manifest.record("smote", ArtifactKind::Output, &resampled, seed)?;
        manifest.note_timing("smote", started.elapsed().as_millis());
        train_csv = resampled;
    }

    // train
    let kind = TrainKind::parse(cfg.get("train", "kind").unwrap_or("ann")).ok_or_else(|| {
        PipelineError::BadValue {
            section: "train".to_string(),
            key: "kind".to_string(),
            value: cfg.get("train", "kind").unwrap_or("").to_string(),
        }
    })?;
    let train_seed = cfg.get_u64("train", "seed", 7)?;
    let started = Instant::now();
    manifest.record("train", ArtifactKind::Input, &train_csv, train_seed)?;
    manifest.record("train", ArtifactKind::Input, &val_csv, train_seed)?;
    match kind {
        TrainKind::Ann | TrainKind::Logreg => {
            let weights = WeightsMode::parse(cfg.get("train", "weights").unwrap_or("formula"))
                .ok_or_else(|| PipelineError::BadValue {
                    section: "train".to_string(),
                    key: "weights".to_string(),
                    value: cfg.get("train", "weights").unwrap_or("").to_string(),
                })?;
            let init = match cfg.get("train", "init").unwrap_or("he") {
                "he" => InitScheme::HeUniform,
                "glorot" => InitScheme::GlorotUniform,
                other => {
                    return Err(PipelineError::BadValue {
                        section: "train".to_string(),
                        key: "init".to_string(),
                        value: other.to_string(),
                    })
                }
            };
            let encoding = match cfg.get("train", "encoding").unwrap_or("integer") {
                "integer" => NominalEncoding::IntegerCodes,
                "onehot" => NominalEncoding::OneHot,
                other => {
                    return Err(PipelineError::BadValue {
                        section: "train".to_string(),
                        key: "encoding".to_string(),
                        value: other.to_string(),
                    })
                }
            };
            let config = TrainConfig {
                hidden: cfg.get_usize_list("train", "hidden", &[1200, 1200, 1200])?,
                batch_size: cfg.get_usize("train", "batch_size", 512)?,
                max_epochs: cfg.get_usize("train", "max_epochs", 100)?,
                patience: cfg.get_usize("train", "patience", 5)?,
                learning_rate: cfg.get_f64("train", "learning_rate", 1e-3)?,
                init,
                optimizer: OptimizerKind::Adam,
                l2: cfg.get_f64("train", "l2", 0.0)?,
                encoding,
                seed: train_seed,
                ..TrainConfig::default()
            };
            let model = stage_train_supervised(kind, &train_csv, &val_csv, &config, &weights, out_dir)
                .map_err(|e| e.in_stage("train"))?;
            manifest.record("train", ArtifactKind::Output, &model, train_seed)?;
        }
        TrainKind::Dqn => {
            let optimizer = match cfg.get("dqn", "optimizer").unwrap_or("sgd") {
                "sgd" => OptimizerKind::Sgd,
                "adam" => OptimizerKind::Adam,
                other => {
                    return Err(PipelineError::BadValue {
                        section: "dqn".to_string(),
                        key: "optimizer".to_string(),
                        value: other.to_string(),
                    })
                }
            };
            let hyper = AgentHyperparameters {
                epsilon_start: cfg.get_f64("dqn", "epsilon_start", 1.0)?,
                epsilon_end: cfg.get_f64("dqn", "epsilon_end", 0.01)?,
                epsilon_decay_steps: cfg.get_usize("dqn", "epsilon_decay_steps", 0)?,
                gamma: cfg.get_f64("dqn", "gamma", 0.1)?,
                batch_size: cfg.get_usize("dqn", "batch_size", 64)?,
                target_update_every: cfg.get_usize("dqn", "target_update_every", 5)?,
                learning_rate: cfg.get_f64("dqn", "learning_rate", 1e-3)?,
                memory_capacity: cfg.get_usize("dqn", "memory", 1_000_000)?,
                optimizer,
                seed: train_seed,
            };
            let hidden = cfg.get_usize_list("train", "hidden", &[1200, 1200, 1200])?;
            let episodes = cfg.get_usize("dqn", "episodes", 500)?;
            let agent_dir = stage_train_dqn(&train_csv, &hidden, &hyper, episodes, out_dir)
                .map_err(|e| e.in_stage("train"))?;
            manifest.record(
                "train",
                ArtifactKind::Output,
                &agent_dir.join("target.mlp"),
                train_seed,
            )?;
        }
    }
    manifest.note_timing("train", started.elapsed().as_millis());

    // evaluate
    let mut evaluation = None;
    if cfg.get_bool("evaluate", "enabled", true)? {
        let started = Instant::now();
        manifest.record("evaluate", ArtifactKind::Input, &val_csv, 0)?;
        let report = stage_evaluate(kind, out_dir, &val_csv, out_dir)
            .map_err(|e| e.in_stage("evaluate"))?;
        manifest.record("evaluate", ArtifactKind::Output, &report, 0)?;
        manifest.note_timing("evaluate", started.elapsed().as_millis());
        evaluation = Some(report);
    }

    manifest.write()?;
    Ok(RunOutputs { out_dir: out_dir.to_path_buf(), evaluation })
}

#[cfg(test)]
mod tests;
