//! End-to-end flows behind the command-line interface.

mod evaluate;
mod sweep;
mod train;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use evaluate::{
    evaluate, evaluate_model, export_entity_embeddings, predict, rank_with_model, EvaluateOptions, EvaluateOutcome,
    Prediction, PredictOptions,
};
pub use sweep::{sweep, SweepAxis, SweepRow};
pub use train::{train, BiEncoderTrainer, EpochStats, TrainOutcome, TripleTrainer};

use crate::error::Result;
use crate::graph::Dataset;
use crate::synthetic::{self, SyntheticSpec};

/// Source of a `prepare` run.
#[derive(Clone, Debug, PartialEq)]
pub enum PrepareSource {
    /// Raw TSV directory.
    Raw(PathBuf),
    /// Bundled toy graph.
    Toy,
    /// Generated surrogate graph.
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Loads or generates a dataset and writes it as a prepared store.
pub fn prepare(source: &PrepareSource, output: &Path) -> Result<PrepareSummary> {
    let dataset = match source {
        PrepareSource::Raw(dir) => Dataset::load_raw(dir, None)?,
        PrepareSource::Toy => synthetic::toy_dataset()?,
        PrepareSource::Synthetic(spec) => synthetic::generate(spec)?,
    };
    dataset.save(output)?;
    let summary = PrepareSummary {
        entities: dataset.entities().len(),
        relations: dataset.relations().len(),
        train: dataset.train.len(),
        valid: dataset.valid.len(),
        test: dataset.test.len(),
    };
    log::info!("prepared {} -> {:?}", output.display(), summary);
    Ok(summary)
}
