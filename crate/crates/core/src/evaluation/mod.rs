//! Filtered link-prediction ranking and metrics.

mod evaluate;
mod export;
mod metrics;
mod rank;
mod scorer;

pub use evaluate::{both_directions, rank_queries};
pub use export::{export_embeddings, load_embeddings};
pub use metrics::{compute_metrics, hit_at, Metrics, MetricsReport};
pub use rank::{filtered_rank, top_candidates, RankingResult};
pub use scorer::{
    embed_all_entities, inference_rng, BiEncoderScorer, EntityTable, QueryEmbeddings, Scorer, TripleScorer,
};
