//! `forge`: CSV-stage pipeline for predicting injury severity from
//! accident/vehicle/casualty records.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (malformed inputs or
//! configuration), 3 stage failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use forge_core::derive_seed;
use forge_core::fixture::{write_fixture, FixtureSpec};
use forge_core::forest::ForestConfig;
use forge_core::neural::{InitScheme, NominalEncoding, OptimizerKind, TrainConfig};
use forge_core::pipeline::{
    self, preset, ConfigFile, MergeInputs, PipelineError, TrainKind, WeightsMode, PRESET_NAMES,
};
use forge_core::rl::AgentHyperparameters;

#[derive(Parser)]
#[command(
    name = "forge",
    version,
    about = "Injury-severity prediction pipeline: merge, clean, analyze, impute, resample, train, evaluate",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory for this stage's artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Join accidents, vehicles and casualties into one table.
    Merge {
        #[arg(long)]
        accidents: PathBuf,
        #[arg(long)]
        accidents_schema: PathBuf,
        #[arg(long)]
        vehicles: PathBuf,
        #[arg(long)]
        vehicles_schema: PathBuf,
        #[arg(long)]
        casualties: PathBuf,
        #[arg(long)]
        casualties_schema: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Apply a cleaning plan (drops, recodes, domain rules, row filters).
    Clean {
        /// Input CSV (with a sibling .schema file).
        #[arg(long)]
        input: PathBuf,
        /// Cleaning plan file.
        #[arg(long)]
        plan: PathBuf,
        /// Skip Date/Time expansion into Hour, Month, Year.
        #[arg(long)]
        no_expand_time: bool,
        #[arg(long, default_value = "Date")]
        date_column: String,
        #[arg(long, default_value = "Time")]
        time_column: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Feature association metrics, importance ranking, prune candidates.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// High-correlation threshold for prune candidates.
        #[arg(long, default_value_t = 0.7)]
        threshold: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Staged random-forest imputation of missing values.
    Impute {
        #[arg(long)]
        input: PathBuf,
        /// Imputation plan file (stage groups).
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 10)]
        max_iterations: usize,
        #[arg(long, default_value_t = 5)]
        min_leaf: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// SMOTE-equalize the class counts of a training table.
    Smote {
        #[arg(long)]
        input: PathBuf,
        /// Neighbours per synthetic sample.
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 13)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Train the class-weighted feedforward classifier.
    TrainAnn {
        #[arg(long, value_delimiter = ',', default_value = "1200,1200,1200")]
        hidden: Vec<usize>,
        #[command(flatten)]
        common: TrainSupervisedArgs,
    },
    /// Train the logistic-regression baseline (L2-penalized, no hidden
    /// layers).
    TrainLogreg {
        #[command(flatten)]
        common: TrainSupervisedArgs,
    },
    /// Train the deep Q-learning classifier.
    TrainDqn {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1200,1200,1200")]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 500)]
        episodes: usize,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 1_000_000)]
        memory: usize,
        #[arg(long, default_value_t = 1.0)]
        epsilon_start: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon_end: f64,
        /// 0 derives 10x the training-set size.
        #[arg(long, default_value_t = 0)]
        epsilon_decay_steps: usize,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 5)]
        target_update_every: usize,
        #[arg(long, default_value_t = 1e-3)]
        learning_rate: f64,
        /// Q-network optimizer: sgd or adam.
        #[arg(long, default_value = "sgd")]
        optimizer: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Score a trained model on a held-out table.
    Evaluate {
        /// Model family: ann, logreg or dqn.
        #[arg(long)]
        kind: String,
        /// Directory holding the training artifacts (model + encoder).
        #[arg(long)]
        model_dir: PathBuf,
        /// Held-out CSV (with sibling .schema).
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Generate a synthetic accidents/vehicles/casualties fixture.
    Fixture {
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
        /// slight,serious,fatal proportions (must sum to 1).
        #[arg(long, value_delimiter = ',', default_value = "0.871,0.1187,0.0103")]
        proportions: Vec<f64>,
        /// MCAR missingness on the optional feature columns.
        #[arg(long, default_value_t = 0.15)]
        missing: f64,
        /// Missingness on Eastings/Northings/Time.
        #[arg(long, default_value_t = 0.005)]
        required_missing: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write a ready-to-run pipeline config next to the files.
        #[arg(long)]
        emit_config: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the full pipeline from a config file or preset.
    Run {
        /// Pipeline config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in preset: experiment1, experiment2, experiment3,
        /// rl-baseline. A config file overlays the preset.
        #[arg(long)]
        preset: Option<String>,
        /// Base seed: overrides every stage seed deterministically.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args)]
struct TrainSupervisedArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[arg(long, default_value_t = 512)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    /// formula, none, or three comma-separated values (slight,serious,fatal).
    #[arg(long, default_value = "formula")]
    weights: String,
    /// Weight initialization: he or glorot.
    #[arg(long, default_value = "he")]
    init: String,
    /// Nominal feature encoding: integer or onehot.
    #[arg(long, default_value = "integer")]
    encoding: String,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

enum CliError {
    Usage(String),
    Pipeline(PipelineError),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

impl From<forge_core::fixture::FixtureError> for CliError {
    fn from(e: forge_core::fixture::FixtureError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn ensure_dir(dir: &PathBuf) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Pipeline(PipelineError::Io { path: dir.display().to_string(), source: e })
    })
}

fn supervised(
    kind: TrainKind,
    hidden: Vec<usize>,
    args: &TrainSupervisedArgs,
) -> Result<(), CliError> {
    ensure_dir(&args.out.out)?;
    let weights = WeightsMode::parse(&args.weights)
        .ok_or_else(|| CliError::Usage(format!("bad --weights `{}`", args.weights)))?;
    let init = match args.init.as_str() {
        "he" => InitScheme::HeUniform,
        "glorot" => InitScheme::GlorotUniform,
        other => return Err(CliError::Usage(format!("bad --init `{other}`"))),
    };
    let encoding = match args.encoding.as_str() {
        "integer" => NominalEncoding::IntegerCodes,
        "onehot" => NominalEncoding::OneHot,
        other => return Err(CliError::Usage(format!("bad --encoding `{other}`"))),
    };
    let config = TrainConfig {
        hidden,
        batch_size: args.batch_size,
        max_epochs: args.max_epochs,
        patience: args.patience,
        learning_rate: args.learning_rate,
        init,
        l2: args.l2,
        encoding,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let model = pipeline::stage_train_supervised(
        kind,
        &args.train,
        &args.val,
        &config,
        &weights,
        &args.out.out,
    )?;
    println!("model written to {}", model.display());
    Ok(())
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Merge {
            accidents,
            accidents_schema,
            vehicles,
            vehicles_schema,
            casualties,
            casualties_schema,
            out,
        } => {
            ensure_dir(&out.out)?;
            let inputs = MergeInputs {
                accidents,
                accidents_schema,
                vehicles,
                vehicles_schema,
                casualties,
                casualties_schema,
            };
            let merged = pipeline::stage_merge(&inputs, &out.out)?;
            println!("merged table written to {}", merged.display());
        }
        Command::Clean { input, plan, no_expand_time, date_column, time_column, out } => {
            ensure_dir(&out.out)?;
            let cleaned = pipeline::stage_clean(
                &input,
                &plan,
                !no_expand_time,
                &date_column,
                &time_column,
                &out.out,
            )?;
            println!("cleaned table written to {}", cleaned.display());
        }
        Command::Analyze { input, threshold, out } => {
            ensure_dir(&out.out)?;
            let pruned = pipeline::stage_analyze(&input, threshold, &out.out)?;
            println!("association report written; prune list at {}", pruned.display());
        }
        Command::Impute { input, plan, trees, max_iterations, min_leaf, seed, out } => {
            ensure_dir(&out.out)?;
            let forest = ForestConfig { n_trees: trees, min_leaf, seed, ..ForestConfig::default() };
            let imputed =
                pipeline::stage_impute(&input, &plan, forest, max_iterations, &out.out)?;
            println!("imputed table written to {}", imputed.display());
        }
        Command::Smote { input, k, seed, out } => {
            ensure_dir(&out.out)?;
            let resampled = pipeline::stage_smote(&input, k, seed, &out.out)?;
            println!("resampled table written to {}", resampled.display());
        }
        Command::TrainAnn { hidden, common } => supervised(TrainKind::Ann, hidden, &common)?,
        Command::TrainLogreg { common } => supervised(TrainKind::Logreg, Vec::new(), &common)?,
        Command::TrainDqn {
            train,
            hidden,
            episodes,
            gamma,
            memory,
            epsilon_start,
            epsilon_end,
            epsilon_decay_steps,
            batch_size,
            target_update_every,
            learning_rate,
            optimizer,
            seed,
            out,
        } => {
            ensure_dir(&out.out)?;
            let optimizer = match optimizer.as_str() {
                "sgd" => OptimizerKind::Sgd,
                "adam" => OptimizerKind::Adam,
                other => return Err(CliError::Usage(format!("bad --optimizer `{other}`"))),
            };
            let hyper = AgentHyperparameters {
                epsilon_start,
                epsilon_end,
                epsilon_decay_steps,
                gamma,
                batch_size,
                target_update_every,
                learning_rate,
                memory_capacity: memory,
                optimizer,
                seed,
            };
            let agent_dir =
                pipeline::stage_train_dqn(&train, &hidden, &hyper, episodes, &out.out)?;
            println!("agent written to {}", agent_dir.display());
        }
        Command::Evaluate { kind, model_dir, test, out } => {
            ensure_dir(&out.out)?;
            let kind = TrainKind::parse(&kind)
                .ok_or_else(|| CliError::Usage(format!("bad --kind `{kind}`")))?;
            let report = pipeline::stage_evaluate(kind, &model_dir, &test, &out.out)?;
            let summary = out.out.join("evaluation.txt");
            if let Ok(text) = std::fs::read_to_string(&summary) {
                print!("{text}");
            }
            println!("evaluation written to {}", report.display());
        }
        Command::Fixture {
            rows,
            proportions,
            missing,
            required_missing,
            seed,
            emit_config,
            out,
        } => {
            if proportions.len() != 3 {
                return Err(CliError::Usage(
                    "--proportions needs slight,serious,fatal".to_string(),
                ));
            }
            let spec = FixtureSpec {
                casualties: rows,
                proportions: [proportions[0], proportions[1], proportions[2]],
                missing_rate: missing,
                required_missing_rate: required_missing,
                seed,
            };
            let artifacts = write_fixture(&spec, &out.out)?;
            println!("fixture written under {}", out.out.display());
            if emit_config {
                let write = |path: &std::path::Path, cfg: &ConfigFile| -> Result<(), CliError> {
                    std::fs::write(path, cfg.to_text()).map_err(|e| {
                        CliError::Pipeline(PipelineError::Io {
                            path: path.display().to_string(),
                            source: e,
                        })
                    })
                };
                // Standalone-runnable config plus a paths-only overlay for
                // combining with presets (the overlay never overrides a
                // preset's training setup).
                let full = fixture_config(&out.out);
                let full_path = out.out.join("pipeline.conf");
                write(&full_path, &full)?;
                let paths_path = out.out.join("paths.conf");
                write(&paths_path, &fixture_paths_config(&out.out))?;
                println!("pipeline config written to {}", full_path.display());
                println!("preset overlay written to {}", paths_path.display());
            }
            let _ = artifacts;
        }
        Command::Run { config, preset: preset_name, seed, out } => {
            let mut cfg = match &preset_name {
                Some(name) => {
                    let text = preset(name).ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown preset `{name}` (available: {})",
                            PRESET_NAMES.join(", ")
                        ))
                    })?;
                    ConfigFile::parse(text)?
                }
                None => ConfigFile::default(),
            };
            match &config {
                Some(path) => {
                    // Overlay: explicit config wins over the preset.
                    let overlay = ConfigFile::load(path)?;
                    cfg = merge_configs(cfg, overlay);
                }
                None if preset_name.is_none() => {
                    return Err(CliError::Usage(
                        "run needs --config and/or --preset".to_string(),
                    ))
                }
                None => {}
            }
            if let Some(base) = seed {
                for (section, key, tag) in [
                    ("split", "seed", 1u64),
                    ("impute", "seed", 2),
                    ("smote", "seed", 3),
                    ("train", "seed", 4),
                ] {
                    cfg.set(section, key, derive_seed(base, tag).to_string());
                }
            }
            let outputs = pipeline::run_pipeline(&cfg, &out.out)?;
            println!("run complete; artifacts under {}", outputs.out_dir.display());
            if let Some(evaluation) = outputs.evaluation {
                let summary = evaluation.with_extension("txt");
                if let Ok(text) = std::fs::read_to_string(summary) {
                    print!("{text}");
                }
            }
        }
    }
    Ok(())
}

/// Input paths of a generated fixture: the merge sources, cleaning plan
/// and imputation plan, with no stage parameters.
fn fixture_paths_config(dir: &std::path::Path) -> ConfigFile {
    let mut cfg = ConfigFile::default();
    for (file, key, schema_key) in [
        ("accidents.csv", "accidents", "accidents_schema"),
        ("vehicles.csv", "vehicles", "vehicles_schema"),
        ("casualties.csv", "casualties", "casualties_schema"),
    ] {
        cfg.set("merge", key, dir.join(file).display().to_string());
        cfg.set(
            "merge",
            schema_key,
            dir.join(file).with_extension("schema").display().to_string(),
        );
    }
    cfg.set("clean", "plan", dir.join("cleaning.plan").display().to_string());
    cfg.set("impute", "plan", dir.join("impute.plan").display().to_string());
    cfg
}

/// Pipeline config pointing at a generated fixture directory.
fn fixture_config(dir: &std::path::Path) -> ConfigFile {
    let mut cfg = ConfigFile::default();
    for (file, key, schema_key) in [
        ("accidents.csv", "accidents", "accidents_schema"),
        ("vehicles.csv", "vehicles", "vehicles_schema"),
        ("casualties.csv", "casualties", "casualties_schema"),
    ] {
        cfg.set("merge", key, dir.join(file).display().to_string());
        cfg.set(
            "merge",
            schema_key,
            dir.join(file).with_extension("schema").display().to_string(),
        );
    }
    cfg.set("clean", "plan", dir.join("cleaning.plan").display().to_string());
    cfg.set("analyze", "enabled", "true");
    cfg.set("analyze", "threshold", "0.7");
    cfg.set("impute", "enabled", "true");
    cfg.set("impute", "plan", dir.join("impute.plan").display().to_string());
    cfg.set("impute", "trees", "20");
    cfg.set("impute", "max_iterations", "3");
    cfg.set("impute", "seed", "11");
    cfg.set("split", "train_fraction", "0.75");
    cfg.set("split", "seed", "5");
    cfg.set("train", "kind", "ann");
    cfg.set("train", "hidden", "32");
    cfg.set("train", "batch_size", "128");
    cfg.set("train", "max_epochs", "10");
    cfg.set("train", "patience", "3");
    cfg.set("train", "weights", "formula");
    cfg.set("train", "seed", "7");
    cfg.set("evaluate", "enabled", "true");
    cfg
}

fn merge_configs(base: ConfigFile, overlay: ConfigFile) -> ConfigFile {
    // ConfigFile::set overwrites, so replay the overlay on top of the base.
    let mut merged = base;
    for section in overlay.sections() {
        for (key, value) in overlay.keys(section) {
            merged.set(section, key, value);
        }
    }
    merged
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version land here with a zero-cost kind.
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Pipeline(e)) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
