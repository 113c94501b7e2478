//! Trains each model family with and without anchors on a small surrogate graph
//! and prints test metrics. Usage: `cargo run --release --example ablation [seed]`.

use std::time::Instant;

use raa_core::anchoring::AblationMode;
use raa_core::encoders::Model;
use raa_core::graph::Split;
use raa_core::parallel::Exec;
use raa_core::pipeline::{evaluate_model, BiEncoderTrainer, TripleTrainer};
use raa_core::synthetic::{generate, SyntheticSpec};
use raa_core::{ModelKind, RunConfig};

fn main() -> raa_core::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let spec = match std::env::var("SPEC").as_deref() {
        Ok("wordnet") => SyntheticSpec::wordnet_v1_like(seed),
        _ => SyntheticSpec::small(seed),
    };
    let dataset = generate(&spec)?;
    println!(
        "entities {} train {} test {}",
        dataset.entities().len(),
        dataset.train.len(),
        dataset.test.len()
    );
    let runs = [
        (ModelKind::BiEncoder, AblationMode::NT),
        (ModelKind::BiEncoder, AblationMode::IRT),
        (ModelKind::TransE, AblationMode::NT),
        (ModelKind::TransE, AblationMode::IRT),
        (ModelKind::ComplEx, AblationMode::NT),
        (ModelKind::ComplEx, AblationMode::IRT),
    ];
    for (model, mode) in runs {
        let epochs: usize = std::env::var("EPOCHS").ok().and_then(|s| s.parse().ok()).unwrap_or(10);
        let config = RunConfig {
            model,
            mode,
            dim: 32,
            vocab_size: 2000,
            max_seq_len: 24,
            batch_size: 32,
            epochs,
            learning_rate: if model == ModelKind::BiEncoder { 3e-3 } else { 1e-2 },
            seed,
            ..RunConfig::default()
        };
        let start = Instant::now();
        let trained = match model {
            ModelKind::BiEncoder => {
                let mut t = BiEncoderTrainer::<raa_core::training::AnchorsEnabled>::new(&config, &dataset, Exec::default())?;
                for _ in 0..config.epochs {
                    t.run_epoch()?;
                }
                Model::BiEncoder(t.model)
            }
            _ => {
                let mut t = TripleTrainer::new(&config, &dataset)?;
                for _ in 0..config.epochs {
                    t.run_epoch()?;
                }
                Model::Triple(t.model)
            }
        };
        let (report, _) = evaluate_model(&trained, &config, &dataset, Split::Test, None, Exec::default())?;
        let m = report.overall;
        println!(
            "{model:>10} {mode:>3}  MRR {:6.2}  H@1 {:6.2}  H@3 {:6.2}  H@10 {:6.2}  ({:.1}s)",
            m.mrr,
            m.hit1,
            m.hit3,
            m.hit10,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
