//! Drives the `raa` binary end to end on the toy graph.

use std::path::Path;
use std::process::{Command, Output};

fn raa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_raa"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("RAA_SEED")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn train_toy(dir: &Path, extra: &[&str]) -> serde_json::Value {
    let data = dir.join("toy");
    json(&raa(&["prepare", "--toy", "--output", data.to_str().unwrap()]));
    let run = dir.join("run");
    let mut args = vec![
        "train", "--dataset", data.to_str().unwrap(), "--output-dir", run.to_str().unwrap(),
        "--dim", "16", "--vocab-size", "512", "--max-seq-len", "32", "--batch-size", "8", "--epochs", "2",
    ];
    args.extend_from_slice(extra);
    json(&raa(&args))
}

#[test]
fn prepare_train_evaluate_predict() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = train_toy(dir.path(), &[]);
    let ckpt = outcome["checkpoint_dir"].as_str().unwrap().to_string();
    let out = dir.path().join("eval");
    let emb = dir.path().join("emb.tsv");
    let report = json(&raa(&[
        "evaluate", "--checkpoint", &ckpt, "--output", out.to_str().unwrap(),
        "--export-embeddings", emb.to_str().unwrap(),
    ]));
    assert_eq!(report["split"], "test");
    assert!(report["overall"]["mrr"].is_number());
    assert!(out.join("metrics.csv").is_file());
    assert!(emb.is_file());

    let pred = json(&raa(&[
        "--sequential", "predict", "--checkpoint", &ckpt, "--head", "dog", "--relation", "_hypernym", "--top-m", "2",
    ]));
    assert_eq!(pred["candidates"].as_array().unwrap().len(), 2);
}

#[test]
fn seed_precedence_is_flag_then_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy");
    json(&raa(&["prepare", "--toy", "--output", data.to_str().unwrap()]));
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 5, "dim": 8, "vocab_size": 256, "epochs": 1, "batch_size": 8}"#).unwrap();
    let run = dir.path().join("run");
    let digest = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_raa"));
        cmd.args(["train", "--config", cfg.to_str().unwrap(), "--dataset", data.to_str().unwrap()])
            .args(["--output-dir", run.to_str().unwrap()])
            .args(extra)
            .env("RUST_LOG", "warn")
            .env_remove("RAA_SEED");
        if let Some(v) = env {
            cmd.env("RAA_SEED", v);
        }
        json(&cmd.output().unwrap())["digest"].as_str().unwrap().to_string()
    };
    let file = digest(&[], None);
    let explicit_file = digest(&["--seed", "5"], None);
    let env = digest(&[], Some("9"));
    let flag_over_env = digest(&["--seed", "5"], Some("9"));
    assert_eq!(file, explicit_file);
    assert_ne!(file, env);
    assert_eq!(flag_over_env, file);
}

#[test]
fn bad_input_exit_codes() {
    // argument errors and invalid configurations exit 1
    assert_eq!(raa(&["train", "--epochs", "many"]).status.code(), Some(1));
    assert_eq!(raa(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(raa(&["train", "--k", "9"]).status.code(), Some(1));
    assert_eq!(raa(&["prepare", "--output", "x"]).status.code(), Some(1));
    assert_eq!(raa(&["--help"]).status.code(), Some(0));
    // missing data exits 2
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    assert_eq!(
        raa(&["train", "--dataset", missing.to_str().unwrap(), "--output-dir", dir.path().to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unknown_entity_in_predict_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = train_toy(dir.path(), &["--model", "transe"]);
    let ckpt = outcome["checkpoint_dir"].as_str().unwrap();
    let out = raa(&["predict", "--checkpoint", ckpt, "--head", "unicorn", "--relation", "_hypernym"]);
    assert_eq!(out.status.code(), Some(2));
}
