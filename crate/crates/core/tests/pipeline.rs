//! End-to-end runs over the bundled toy graph.

use std::fs;
use std::path::{Path, PathBuf};

use raa_core::anchoring::AblationMode;
use raa_core::evaluation::load_embeddings;
use raa_core::graph::Split;
use raa_core::parallel::Exec;
use raa_core::pipeline::{
    self, evaluate, export_entity_embeddings, predict, sweep, EvaluateOptions, PredictOptions, PrepareSource,
    SweepAxis,
};
use raa_core::{ModelKind, RunConfig};

fn prepared(dir: &Path) -> PathBuf {
    let data = dir.join("toy");
    pipeline::prepare(&PrepareSource::Toy, &data).unwrap();
    data
}

fn config(dir: &Path, model: ModelKind) -> RunConfig {
    RunConfig {
        dataset: prepared(dir),
        output_dir: dir.join("run"),
        model,
        dim: 32,
        vocab_size: 1024,
        max_seq_len: 32,
        batch_size: 8,
        epochs: 40,
        learning_rate: 1e-2,
        patience: 0,
        ..RunConfig::default()
    }
}

/// `100 · mean(1/rank)` with the gold uniformly placed among `n` candidates.
fn random_baseline_mrr(n: usize) -> f64 {
    100.0 * (1..=n).map(|r| 1.0 / r as f64).sum::<f64>() / n as f64
}

#[test]
fn trained_models_beat_the_random_baseline() {
    for model in [ModelKind::BiEncoder, ModelKind::TransE, ModelKind::ComplEx] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), model);
        let outcome = pipeline::train(&cfg, Exec::default()).unwrap();
        assert_eq!(outcome.epochs_run, cfg.epochs);
        let eval = evaluate(
            &EvaluateOptions {
                checkpoint: outcome.checkpoint_dir.clone(),
                split: Some(Split::Train),
                ..Default::default()
            },
            Exec::default(),
        )
        .unwrap();
        let baseline = random_baseline_mrr(18);
        assert!(
            eval.report.overall.mrr > baseline,
            "{model}: MRR {} vs random {baseline}",
            eval.report.overall.mrr
        );
    }
}

#[test]
fn training_writes_log_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { epochs: 3, patience: 2, ..config(dir.path(), ModelKind::BiEncoder) };
    let outcome = pipeline::train(&cfg, Exec::default()).unwrap();
    let log = fs::read_to_string(cfg.output_dir.join("train_log.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines[0].get("config").is_some());
    let steps: Vec<_> = lines.iter().filter(|l| l.get("step").is_some()).collect();
    let epochs: Vec<_> = lines.iter().filter(|l| l.get("epoch").is_some()).collect();
    assert_eq!(epochs.len(), outcome.epochs_run);
    assert_eq!(steps.len() as u64, outcome.history.last().unwrap().steps);
    for (i, s) in steps.iter().enumerate() {
        assert_eq!(s["step"], i as u64 + 1);
        for key in ["L_hr", "L_hrt_a", "L_cls", "tau"] {
            assert!(s[key].is_number(), "{key} missing");
        }
    }
    assert!(epochs[0]["valid_mrr"].is_number());
    assert!(cfg.output_dir.join("checkpoint").is_dir());
    assert!(cfg.output_dir.join("checkpoint-last").is_dir());
    assert!(outcome.best_valid_mrr.is_some());
}

#[test]
fn evaluation_writes_reports_and_predictions_name_entities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { epochs: 2, ..config(dir.path(), ModelKind::BiEncoder) };
    let outcome = pipeline::train(&cfg, Exec::default()).unwrap();
    let out = dir.path().join("eval");
    let eval = evaluate(
        &EvaluateOptions {
            checkpoint: outcome.checkpoint_dir.clone(),
            output_dir: Some(out.clone()),
            mode: Some(AblationMode::IET),
            ..Default::default()
        },
        Exec::default(),
    )
    .unwrap();
    assert_eq!(eval.written.len(), 3);
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("# config: "));
    assert!(csv.contains("scope,relation,count,MRR,Hit@1,Hit@3,Hit@10"));
    let rankings = fs::read_to_string(out.join("rankings.jsonl")).unwrap();
    assert_eq!(rankings.lines().count(), eval.results.len());

    let p = predict(
        &PredictOptions {
            checkpoint: outcome.checkpoint_dir.clone(),
            head: "dog".into(),
            relation: "_hypernym".into(),
            top_m: Some(3),
            ..Default::default()
        },
        Exec::default(),
    )
    .unwrap();
    assert_eq!(p.candidates.len(), 3);
    assert!(p.anchors.contains(&"canine".to_string()));
    let inverse = predict(
        &PredictOptions {
            checkpoint: outcome.checkpoint_dir,
            head: "canine".into(),
            relation: "_hypernym^-1".into(),
            ..Default::default()
        },
        Exec::default(),
    )
    .unwrap();
    assert_eq!(inverse.relation, "_hypernym^-1");
}

#[test]
fn inductive_evaluation_uses_the_unseen_graph() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { epochs: 2, ..config(dir.path(), ModelKind::BiEncoder) };
    let outcome = pipeline::train(&cfg, Exec::default()).unwrap();
    let unseen = dir.path().join("unseen");
    fs::create_dir_all(&unseen).unwrap();
    fs::write(unseen.join("train.txt"), "puma\t_hypernym\tfeline\nlynx\t_hypernym\tfeline\n").unwrap();
    fs::write(unseen.join("test.txt"), "ocelot\t_hypernym\tfeline\n").unwrap();
    fs::write(
        unseen.join("descriptions.tsv"),
        "puma\tpuma\ta large american wild cat\nlynx\tlynx\ta wild cat with tufted ears\nocelot\tocelot\ta spotted wild cat\n",
    )
    .unwrap();
    let eval = evaluate(
        &EvaluateOptions {
            checkpoint: outcome.checkpoint_dir,
            inductive: Some(unseen),
            ..Default::default()
        },
        Exec::default(),
    )
    .unwrap();
    assert_eq!(eval.report.overall.count, 2);
    // candidates are restricted to the unseen graph's entities
    assert!(eval.results.iter().all(|r| r.rank <= 4));
}

#[test]
fn triple_models_reject_inductive_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { epochs: 1, ..config(dir.path(), ModelKind::TransE) };
    let outcome = pipeline::train(&cfg, Exec::default()).unwrap();
    let err = evaluate(
        &EvaluateOptions {
            checkpoint: outcome.checkpoint_dir,
            inductive: Some(cfg.dataset.clone()),
            ..Default::default()
        },
        Exec::default(),
    );
    assert!(err.is_err());
}

#[test]
fn sweeps_cover_the_default_grids() {
    let dir = tempfile::tempdir().unwrap();
    let base = RunConfig { epochs: 1, dim: 8, ..config(dir.path(), ModelKind::BiEncoder) };
    let k_rows = sweep(&base, SweepAxis::K, None, Split::Valid, Exec::default()).unwrap();
    assert_eq!(k_rows.len(), 6);
    let a_rows = sweep(&base, SweepAxis::Alpha, None, Split::Valid, Exec::default()).unwrap();
    assert_eq!(a_rows.len(), 5);
    assert!(base.output_dir.join("sweep.csv").is_file());
    assert!(base.output_dir.join("k-0").is_dir());
}

#[test]
fn exported_embeddings_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { epochs: 1, ..config(dir.path(), ModelKind::ComplEx) };
    let outcome = pipeline::train(&cfg, Exec::default()).unwrap();
    let path = dir.path().join("emb.tsv");
    let n = export_entity_embeddings(&outcome.checkpoint_dir, None, &path, Exec::default()).unwrap();
    assert_eq!(n, 18);
    let rows = load_embeddings(&path).unwrap();
    assert_eq!(rows.len(), 18);
    assert!(rows.iter().any(|(name, _)| name == "dog"));
    assert!(rows.iter().all(|(_, r)| r.len() == 32));
}

#[test]
fn executors_agree_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { epochs: 2, ..config(dir.path(), ModelKind::BiEncoder) };
    let a = pipeline::train(&cfg, Exec::Sequential).unwrap();
    let b = pipeline::train(&cfg, Exec::default()).unwrap();
    assert_eq!(a.digest, b.digest);
}

#[test]
fn zero_epochs_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { epochs: 0, ..config(dir.path(), ModelKind::BiEncoder) };
    assert!(matches!(pipeline::train(&cfg, Exec::default()), Err(raa_core::Error::Config(_))));
}
