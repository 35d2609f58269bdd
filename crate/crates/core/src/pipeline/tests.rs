use super::*;
use crate::fixture::{write_fixture, FixtureSpec};

/// Small fixture + fast config for end-to-end runs.
fn fast_config(fixture_dir: &Path) -> ConfigFile {
    let mut cfg = ConfigFile::default();
    for (file, key, schema_key) in [
        ("accidents.csv", "accidents", "accidents_schema"),
        ("vehicles.csv", "vehicles", "vehicles_schema"),
        ("casualties.csv", "casualties", "casualties_schema"),
    ] {
        cfg.set("merge", key, fixture_dir.join(file).display().to_string());
        cfg.set(
            "merge",
            schema_key,
            fixture_dir.join(file).with_extension("schema").display().to_string(),
        );
    }
    cfg.set("clean", "plan", fixture_dir.join("cleaning.plan").display().to_string());
    cfg.set("analyze", "enabled", "true");
    cfg.set("impute", "enabled", "true");
    cfg.set("impute", "plan", fixture_dir.join("impute.plan").display().to_string());
    cfg.set("impute", "trees", "10");
    cfg.set("impute", "max_iterations", "2");
    cfg.set("impute", "seed", "11");
    cfg.set("split", "train_fraction", "0.75");
    cfg.set("split", "seed", "5");
    cfg.set("train", "kind", "ann");
    cfg.set("train", "hidden", "8");
    cfg.set("train", "batch_size", "64");
    cfg.set("train", "max_epochs", "2");
    cfg.set("train", "patience", "2");
    cfg.set("train", "weights", "formula");
    cfg.set("train", "seed", "7");
    cfg.set("evaluate", "enabled", "true");
    cfg
}

fn write_small_fixture(dir: &Path) {
    let spec = FixtureSpec {
        casualties: 600,
        missing_rate: 0.08,
        required_missing_rate: 0.01,
        seed: 42,
        ..Default::default()
    };
    write_fixture(&spec, dir).unwrap();
}

#[test]
fn full_run_emits_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_dir = dir.path().join("fixture");
    write_small_fixture(&fixture_dir);
    let out = dir.path().join("out");
    let cfg = fast_config(&fixture_dir);
    let outputs = run_pipeline(&cfg, &out).unwrap();
    for artifact in [
        "merged.csv",
        "merge_report.txt",
        "clean.csv",
        "cleaning_report.csv",
        "completeness.txt",
        "association.csv",
        "importance.txt",
        "pruned.txt",
        "imputed.csv",
        "imputation_report.csv",
        "train.csv",
        "val.csv",
        "model.mlp",
        "encoder.txt",
        "training_log.csv",
        "predictions.csv",
        "evaluation.csv",
        "evaluation.txt",
        "manifest.csv",
        "timings.txt",
    ] {
        assert!(out.join(artifact).exists(), "missing {artifact}");
    }
    assert!(outputs.evaluation.is_some());
    // Imputed artifact is complete.
    let imputed = load_table(&out.join("imputed.csv")).unwrap();
    assert_eq!(imputed.missing_cells(), 0);
}

#[test]
fn rerun_is_byte_identical_except_timings() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_dir = dir.path().join("fixture");
    write_small_fixture(&fixture_dir);
    let cfg = fast_config(&fixture_dir);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_pipeline(&cfg, &out_a).unwrap();
    run_pipeline(&cfg, &out_b).unwrap();
    let mut compared = 0;
    for entry in std::fs::read_dir(&out_a).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_dir() || entry.file_name() == "timings.txt" {
            continue;
        }
        let name = entry.file_name();
        let a = std::fs::read(entry.path()).unwrap();
        let b = std::fs::read(out_b.join(&name)).unwrap();
        assert_eq!(a, b, "artifact {name:?} differs between reruns");
        compared += 1;
    }
    assert!(compared >= 15, "only {compared} artifacts compared");
}

#[test]
fn smote_and_dqn_paths_run() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_dir = dir.path().join("fixture");
    write_small_fixture(&fixture_dir);
    let out = dir.path().join("out");
    let mut cfg = fast_config(&fixture_dir);
    cfg.set("smote", "enabled", "true");
    cfg.set("smote", "k", "3");
    cfg.set("smote", "seed", "13");
    cfg.set("train", "kind", "dqn");
    cfg.set("dqn", "episodes", "3");
    cfg.set("dqn", "batch_size", "16");
    cfg.set("dqn", "epsilon_decay_steps", "100");
    run_pipeline(&cfg, &out).unwrap();
    assert!(out.join("train_resampled.csv").exists());
    assert!(out.join("dqn").join("target.mlp").exists());
    assert!(out.join("rl_log.csv").exists());
    assert!(out.join("evaluation.csv").exists());
    // SMOTE equalized the training classes.
    let resampled = load_table(&out.join("train_resampled.csv")).unwrap();
    let counts = resampled.class_counts().unwrap();
    assert_eq!(counts[0], counts[1]);
    assert_eq!(counts[1], counts[2]);
}

#[test]
fn disabled_impute_makes_train_fail_fast_on_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_dir = dir.path().join("fixture");
    write_small_fixture(&fixture_dir);
    let out = dir.path().join("out");
    let mut cfg = fast_config(&fixture_dir);
    cfg.set("impute", "enabled", "false");
    let err = run_pipeline(&cfg, &out).unwrap_err();
    match err {
        PipelineError::Stage { stage: "train", source } => {
            assert!(
                matches!(*source, PipelineError::Neural(NeuralError::MissingValues { .. })),
                "unexpected cause: {source}"
            );
        }
        other => panic!("expected train-stage failure, got {other}"),
    }
    // Earlier artifacts survive the abort.
    assert!(out.join("clean.csv").exists());
}

#[test]
fn single_stage_rerun_reproduces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_dir = dir.path().join("fixture");
    write_small_fixture(&fixture_dir);
    let inputs = MergeInputs {
        accidents: fixture_dir.join("accidents.csv"),
        accidents_schema: fixture_dir.join("accidents.schema"),
        vehicles: fixture_dir.join("vehicles.csv"),
        vehicles_schema: fixture_dir.join("vehicles.schema"),
        casualties: fixture_dir.join("casualties.csv"),
        casualties_schema: fixture_dir.join("casualties.schema"),
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    std::fs::create_dir_all(&out_a).unwrap();
    std::fs::create_dir_all(&out_b).unwrap();
    stage_merge(&inputs, &out_a).unwrap();
    stage_merge(&inputs, &out_b).unwrap();
    assert_eq!(
        std::fs::read(out_a.join("merged.csv")).unwrap(),
        std::fs::read(out_b.join("merged.csv")).unwrap()
    );
    let plan = fixture_dir.join("cleaning.plan");
    let clean_a = stage_clean(&out_a.join("merged.csv"), &plan, true, "Date", "Time", &out_a).unwrap();
    let clean_b = stage_clean(&out_b.join("merged.csv"), &plan, true, "Date", "Time", &out_b).unwrap();
    assert_eq!(std::fs::read(clean_a).unwrap(), std::fs::read(clean_b).unwrap());
}

#[test]
fn missing_inputs_are_config_errors() {
    let cfg = ConfigFile::parse("[clean]\nplan = nowhere.plan\n[train]\nkind = ann\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_pipeline(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, PipelineError::MissingKey { .. }), "{err}");
    assert!(err.is_data_error());
}
