//! End-to-end checks of the `forge` binary: stage chaining, presets, exit
//! codes.

use std::path::Path;
use std::process::Command;

fn forge() -> Command {
    Command::new(env!("CARGO_BIN_EXE_forge"))
}

fn run_ok(args: &[&str]) {
    let output = forge().args(args).output().expect("spawn forge");
    assert!(
        output.status.success(),
        "forge {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn stage_chain_matches_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    run_ok(&["fixture", "--rows", "400", "--seed", "9", "--out", &fx.display().to_string(), "--emit-config"]);
    for file in ["accidents.csv", "vehicles.csv", "casualties.csv", "cleaning.plan", "impute.plan", "pipeline.conf", "paths.conf"] {
        assert!(fx.join(file).exists(), "fixture file {file}");
    }

    // Individual stages.
    let stage_out = dir.path().join("stages");
    run_ok(&[
        "merge",
        "--accidents", &path(&fx, "accidents.csv"),
        "--accidents-schema", &path(&fx, "accidents.schema"),
        "--vehicles", &path(&fx, "vehicles.csv"),
        "--vehicles-schema", &path(&fx, "vehicles.schema"),
        "--casualties", &path(&fx, "casualties.csv"),
        "--casualties-schema", &path(&fx, "casualties.schema"),
        "--out", &stage_out.display().to_string(),
    ]);
    run_ok(&[
        "clean",
        "--input", &path(&stage_out, "merged.csv"),
        "--plan", &path(&fx, "cleaning.plan"),
        "--out", &stage_out.display().to_string(),
    ]);
    run_ok(&[
        "analyze",
        "--input", &path(&stage_out, "clean.csv"),
        "--out", &stage_out.display().to_string(),
    ]);
    run_ok(&[
        "impute",
        "--input", &path(&stage_out, "clean.csv"),
        "--plan", &path(&fx, "impute.plan"),
        "--trees", "10",
        "--max-iterations", "2",
        "--out", &stage_out.display().to_string(),
    ]);

    // Full run from the emitted config.
    let run_out = dir.path().join("run");
    run_ok(&[
        "run",
        "--config", &path(&fx, "pipeline.conf"),
        "--out", &run_out.display().to_string(),
    ]);
    for artifact in ["merged.csv", "clean.csv", "imputed.csv", "model.mlp", "evaluation.csv", "manifest.csv"] {
        assert!(run_out.join(artifact).exists(), "run artifact {artifact}");
    }

    // The shared prefix stages agree byte-for-byte with the single-stage runs.
    assert_eq!(
        std::fs::read(stage_out.join("merged.csv")).unwrap(),
        std::fs::read(run_out.join("merged.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(stage_out.join("clean.csv")).unwrap(),
        std::fs::read(run_out.join("clean.csv")).unwrap()
    );
}

#[test]
fn train_and_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    run_ok(&["fixture", "--rows", "500", "--seed", "4", "--missing", "0", "--required-missing", "0", "--out", &fx.display().to_string(), "--emit-config"]);
    let out = dir.path().join("out");
    run_ok(&["run", "--config", &path(&fx, "pipeline.conf"), "--out", &out.display().to_string()]);

    // Score the trained model again through the standalone evaluate command.
    let eval_out = dir.path().join("eval");
    run_ok(&[
        "evaluate",
        "--kind", "ann",
        "--model-dir", &out.display().to_string(),
        "--test", &path(&out, "val.csv"),
        "--out", &eval_out.display().to_string(),
    ]);
    assert_eq!(
        std::fs::read(out.join("predictions.csv")).unwrap(),
        std::fs::read(eval_out.join("predictions.csv")).unwrap()
    );
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    // 1: usage error.
    let out = forge().args(["run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "run without config/preset");
    let out = forge().args(["run", "--preset", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "unknown preset");
    let out = forge().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "unknown subcommand");

    // 2: data error (malformed input file).
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "[merge\n").unwrap();
    let out = forge()
        .args(["run", "--config", &bad.display().to_string(), "--out", &dir.path().join("o").display().to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "malformed config");

    // 3: stage failure (inputs vanish mid-pipeline).
    let cfg = dir.path().join("missing_inputs.conf");
    std::fs::write(
        &cfg,
        "[merge]\naccidents = missing.csv\naccidents_schema = missing.schema\nvehicles = v.csv\nvehicles_schema = v.schema\ncasualties = c.csv\ncasualties_schema = c.schema\n[train]\nkind = ann\n",
    )
    .unwrap();
    let out = forge()
        .args(["run", "--config", &cfg.display().to_string(), "--out", &dir.path().join("o2").display().to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "missing stage inputs");

    // 0: help.
    let out = forge().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn presets_overlay_configs() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    run_ok(&["fixture", "--rows", "400", "--seed", "12", "--missing", "0", "--required-missing", "0", "--out", &fx.display().to_string(), "--emit-config"]);
    // The experiment1 preset (complete rows, no imputation) overlaid with
    // the fixture's paths-only config; shrink the net to stay fast.
    let overlay = dir.path().join("overlay.conf");
    let mut text = std::fs::read_to_string(fx.join("paths.conf")).unwrap();
    text.push_str("\n[train]\nhidden = 8\nmax_epochs = 2\nbatch_size = 64\n");
    std::fs::write(&overlay, text).unwrap();
    let out_dir = dir.path().join("preset_run");
    run_ok(&[
        "run",
        "--preset", "experiment1",
        "--config", &overlay.display().to_string(),
        "--out", &out_dir.display().to_string(),
    ]);
    assert!(out_dir.join("evaluation.csv").exists());
    // experiment1 trains on complete rows only and skips imputation.
    assert!(!out_dir.join("imputed.csv").exists());
    // The overlaid preset keeps its architecture override from the config.
    let manifest = std::fs::read_to_string(out_dir.join("manifest.csv")).unwrap();
    assert!(manifest.contains("train,output,model.mlp"));
}
