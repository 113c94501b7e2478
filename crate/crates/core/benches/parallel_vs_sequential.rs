//! Sequential vs rayon executors on entity encoding, filtered ranking and training steps.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use raa_core::anchoring::{HashingTokenizer, Renderer};
use raa_core::encoders::{BiEncoder, Model};
use raa_core::evaluation::embed_all_entities;
use raa_core::graph::{Dataset, Split};
use raa_core::parallel::Exec;
use raa_core::pipeline::{evaluate_model, BiEncoderTrainer};
use raa_core::synthetic::{self, SyntheticSpec};
use raa_core::RunConfig;

fn executors() -> Vec<(&'static str, Exec)> {
    vec![
        ("sequential", Exec::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Exec::Parallel),
    ]
}

fn setup() -> (Dataset, RunConfig, BiEncoder) {
    let dataset = synthetic::generate(&SyntheticSpec::small(0)).unwrap();
    let config = RunConfig { dim: 32, vocab_size: 2048, max_seq_len: 32, ..RunConfig::default() };
    let model = BiEncoder::init(
        config.vocab_size,
        config.dim,
        config.tau,
        &mut ChaCha8Rng::seed_from_u64(0),
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    (dataset, config, model)
}

fn bench(c: &mut Criterion) {
    let (dataset, config, model) = setup();
    let tokenizer = HashingTokenizer::new(config.vocab_size);
    let renderer = Renderer::new(&dataset.descriptions, &tokenizer, config.max_seq_len);
    let wrapped = Model::BiEncoder(model.clone());

    let mut group = c.benchmark_group("executors");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_function(BenchmarkId::new("embed_entities", name), |b| {
            b.iter(|| embed_all_entities(&model.candidate, &renderer, dataset.entities().len(), exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("rank_test_split", name), |b| {
            b.iter(|| evaluate_model(&wrapped, &config, &dataset, Split::Test, None, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("train_steps", name), |b| {
            b.iter(|| {
                let mut t = BiEncoderTrainer::<raa_core::training::AnchorsEnabled>::new(&config, &dataset, exec).unwrap();
                t.run_steps(4).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
