use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::evaluate::evaluate_model;
use crate::anchoring::{HashingTokenizer, Renderer};
use crate::config::{ModelKind, RunConfig};
use crate::encoders::{BiEncoder, Checkpoint, Model, TripleModel};
use crate::error::{Error, Result};
use crate::evaluation::both_directions;
use crate::graph::{AdjacencyIndex, Dataset, Split, Triple};
use crate::parallel::Exec;
use crate::rng::{self, domain};
use crate::training::{
    assemble_batch, assemble_triple_batch, batch_ranges, train_step, triple_train_step, AnchorPathway, AnchorsEnabled,
    LossBreakdown, OptimizerState,
};

/// Mean losses of one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Optimizer step count at the end of the epoch.
    pub steps: u64,
    pub loss: LossBreakdown,
    /// Per-step losses, in order.
    #[serde(skip)]
    pub step_losses: Vec<LossBreakdown>,
}

fn mean_breakdown(items: &[LossBreakdown]) -> LossBreakdown {
    let n = items.len().max(1) as f64;
    let sum = |f: fn(&LossBreakdown) -> f64| items.iter().map(f).sum::<f64>() / n;
    LossBreakdown {
        anchor: sum(|l| l.anchor),
        classic: sum(|l| l.classic),
        combined: sum(|l| l.combined),
        alpha: items.last().map_or(0.0, |l| l.alpha),
        tau: items.last().map_or(0.0, |l| l.tau),
        margin: items.last().map_or(0.0, |l| l.margin),
    }
}

/// Training queries in both directions, shuffled per epoch from a dedicated stream.
fn epoch_order(queries: &[Triple], seed: u64, epoch: usize) -> Vec<Triple> {
    let mut order = queries.to_vec();
    order.shuffle(&mut rng::stream(seed, domain::SHUFFLE, epoch as u64));
    order
}

/// Text bi-encoder trainer. `P` decides whether the anchor pathway is compiled in.
pub struct BiEncoderTrainer<'d, P: AnchorPathway = AnchorsEnabled> {
    pub model: BiEncoder,
    pub optimizer: OptimizerState,
    config: RunConfig,
    dataset: &'d Dataset,
    index: AdjacencyIndex,
    tokenizer: HashingTokenizer,
    queries: Vec<Triple>,
    exec: Exec,
    epoch: usize,
    _pathway: PhantomData<P>,
}

impl<'d, P: AnchorPathway> BiEncoderTrainer<'d, P> {
    pub fn new(config: &RunConfig, dataset: &'d Dataset, exec: Exec) -> Result<Self> {
        config.validate()?;
        let model = BiEncoder::init(
            config.vocab_size,
            config.dim,
            config.tau,
            &mut rng::stream(config.seed, domain::QUERY_ENCODER_INIT, 0),
            &mut rng::stream(config.seed, domain::CANDIDATE_ENCODER_INIT, 0),
        );
        let optimizer = OptimizerState::adam(&model, config.learning_rate, config.weight_decay);
        Ok(BiEncoderTrainer {
            model,
            optimizer,
            config: config.clone(),
            dataset,
            index: AdjacencyIndex::build(&dataset.train),
            tokenizer: HashingTokenizer::new(config.vocab_size),
            queries: both_directions(dataset.train.triples()),
            exec,
            epoch: 0,
            _pathway: PhantomData,
        })
    }

    fn step_on(&mut self, batch: &[Triple], epoch: usize, offset: usize) -> Result<LossBreakdown> {
        let renderer = Renderer::new(&self.dataset.descriptions, &self.tokenizer, self.config.max_seq_len);
        let items = assemble_batch::<P>(&self.index, &renderer, batch, &self.config, epoch, offset)?;
        train_step::<P>(&mut self.model, &mut self.optimizer, &items, &self.config, self.exec)
    }

    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let epoch = self.epoch;
        let order = epoch_order(&self.queries, self.config.seed, epoch);
        let mut losses = Vec::new();
        for range in batch_ranges(order.len(), self.config.batch_size) {
            let start = range.start;
            losses.push(self.step_on(&order[range], epoch, start)?);
        }
        self.epoch += 1;
        Ok(EpochStats {
            epoch,
            steps: self.optimizer.step,
            loss: mean_breakdown(&losses),
            step_losses: losses,
        })
    }

    /// Runs exactly `steps` optimizer steps, crossing epoch boundaries as needed.
    pub fn run_steps(&mut self, steps: usize) -> Result<Vec<LossBreakdown>> {
        let mut out = Vec::with_capacity(steps);
        while out.len() < steps {
            let epoch = self.epoch;
            let order = epoch_order(&self.queries, self.config.seed, epoch);
            for range in batch_ranges(order.len(), self.config.batch_size) {
                if out.len() == steps {
                    break;
                }
                let start = range.start;
                out.push(self.step_on(&order[range], epoch, start)?);
            }
            self.epoch += 1;
        }
        Ok(out)
    }
}

/// TransE or ComplEx trainer, with the anchor prototype term when enabled.
pub struct TripleTrainer {
    pub model: TripleModel,
    pub optimizer: OptimizerState,
    config: RunConfig,
    index: AdjacencyIndex,
    queries: Vec<Triple>,
    epoch: usize,
}

impl TripleTrainer {
    pub fn new(config: &RunConfig, dataset: &Dataset) -> Result<Self> {
        config.validate()?;
        let kind = config
            .model
            .triple_kind()
            .ok_or_else(|| Error::Config("triple trainer needs transe or complex".into()))?;
        let model = TripleModel::init(
            kind,
            dataset.entities().len(),
            dataset.relations().len(),
            config.dim,
            &mut rng::stream(config.seed, domain::TRIPLE_MODEL_INIT, 0),
        )?;
        let optimizer = OptimizerState::adam(&model, config.learning_rate, config.weight_decay);
        Ok(TripleTrainer {
            model,
            optimizer,
            config: config.clone(),
            index: AdjacencyIndex::build(&dataset.train),
            queries: both_directions(dataset.train.triples()),
            epoch: 0,
        })
    }

    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let epoch = self.epoch;
        let order = epoch_order(&self.queries, self.config.seed, epoch);
        let mut losses = Vec::new();
        for range in batch_ranges(order.len(), self.config.batch_size) {
            let items = assemble_triple_batch(&self.index, &order[range.clone()], &self.config, epoch, range.start)?;
            losses.push(triple_train_step(&mut self.model, &mut self.optimizer, &items, &self.config)?);
        }
        self.epoch += 1;
        Ok(EpochStats {
            epoch,
            steps: self.optimizer.step,
            loss: mean_breakdown(&losses),
            step_losses: losses,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub checkpoint_dir: PathBuf,
    pub digest: String,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_valid_mrr: Option<f64>,
    pub history: Vec<EpochStats>,
}

#[derive(Serialize)]
struct StepLine {
    step: u64,
    #[serde(rename = "L_hr")]
    classic: f64,
    #[serde(rename = "L_hrt_a")]
    anchor: f64,
    #[serde(rename = "L_cls")]
    combined: f64,
    tau: f64,
}

#[derive(Serialize)]
struct LogLine<'a> {
    epoch: usize,
    steps: u64,
    loss: &'a LossBreakdown,
    valid_mrr: Option<f64>,
}

struct Session<'a> {
    config: &'a RunConfig,
    dataset: &'a Dataset,
    exec: Exec,
    log: BufWriter<File>,
    best: Option<(f64, usize, String)>,
    stale: usize,
    history: Vec<EpochStats>,
    last_digest: String,
}

impl Session<'_> {
    fn validating(&self) -> bool {
        self.config.patience > 0 && !self.dataset.valid.is_empty()
    }

    /// Logs the epoch, writes checkpoints and returns whether training should stop.
    fn end_epoch(&mut self, stats: EpochStats, model: Model) -> Result<bool> {
        let out = &self.config.output_dir;
        let ckpt = Checkpoint::new(
            model,
            self.config,
            self.dataset.entities().len(),
            self.dataset.relations().len(),
            stats.epoch + 1,
            stats.steps,
        );
        ckpt.save(&out.join("checkpoint-last"))?;
        let mut valid_mrr = None;
        let mut stop = false;
        if self.validating() {
            let (report, _) = evaluate_model(&ckpt.model, self.config, self.dataset, Split::Valid, None, self.exec)?;
            let mrr = report.overall.mrr;
            valid_mrr = Some(mrr);
            if self.best.as_ref().is_none_or(|b| mrr > b.0) {
                let digest = ckpt.save(&out.join("checkpoint"))?;
                self.best = Some((mrr, stats.epoch, digest.clone()));
                self.last_digest = digest;
                self.stale = 0;
            } else {
                self.stale += 1;
                stop = self.stale >= self.config.patience;
            }
        } else {
            self.last_digest = ckpt.save(&out.join("checkpoint"))?;
        }
        let first = stats.steps + 1 - stats.step_losses.len() as u64;
        for (i, l) in stats.step_losses.iter().enumerate() {
            let line = StepLine {
                step: first + i as u64,
                classic: l.classic,
                anchor: l.anchor,
                combined: l.combined,
                tau: l.tau,
            };
            writeln!(self.log, "{}", serde_json::to_string(&line)?).map_err(|e| Error::io(out, e))?;
        }
        let line = LogLine {
            epoch: stats.epoch,
            steps: stats.steps,
            loss: &stats.loss,
            valid_mrr,
        };
        writeln!(self.log, "{}", serde_json::to_string(&line)?).map_err(|e| Error::io(out, e))?;
        self.log.flush().map_err(|e| Error::io(out, e))?;
        log::info!(
            "epoch {} loss {:.5} (classic {:.5}, anchor {:.5}, tau {:.4}){}",
            stats.epoch,
            stats.loss.combined,
            stats.loss.classic,
            stats.loss.anchor,
            stats.loss.tau,
            valid_mrr.map(|m| format!(" valid MRR {m:.2}")).unwrap_or_default()
        );
        self.history.push(stats);
        Ok(stop)
    }
}

fn open_log(config: &RunConfig) -> Result<BufWriter<File>> {
    let dir: &Path = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("train_log.jsonl");
    let mut log = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
    writeln!(log, "{}", serde_json::json!({ "config": config })).map_err(|e| Error::io(&path, e))?;
    Ok(log)
}

/// Trains the configured model, keeping `checkpoint-last` after every epoch and
/// `checkpoint` at the best validation MRR (or the final epoch without validation).
pub fn train(config: &RunConfig, exec: Exec) -> Result<TrainOutcome> {
    config.validate()?;
    let dataset = Dataset::load(&config.dataset)?;
    train_on(config, &dataset, exec)
}

pub(crate) fn train_on(config: &RunConfig, dataset: &Dataset, exec: Exec) -> Result<TrainOutcome> {
    config.validate()?;
    if config.epochs == 0 {
        return Err(Error::Config("epochs must be positive".into()));
    }
    if dataset.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let mut session = Session {
        config,
        dataset,
        exec,
        log: open_log(config)?,
        best: None,
        stale: 0,
        history: Vec::new(),
        last_digest: String::new(),
    };
    match config.model {
        ModelKind::BiEncoder => {
            let mut t = BiEncoderTrainer::<AnchorsEnabled>::new(config, dataset, exec)?;
            for _ in 0..config.epochs {
                let stats = t.run_epoch()?;
                if session.end_epoch(stats, Model::BiEncoder(t.model.clone()))? {
                    break;
                }
            }
        }
        ModelKind::TransE | ModelKind::ComplEx => {
            let mut t = TripleTrainer::new(config, dataset)?;
            for _ in 0..config.epochs {
                let stats = t.run_epoch()?;
                if session.end_epoch(stats, Model::Triple(t.model.clone()))? {
                    break;
                }
            }
        }
    }
    let epochs_run = session.history.len();
    let (best_valid_mrr, best_epoch, digest) = match session.best {
        Some((m, e, d)) => (Some(m), e, d),
        None => (None, epochs_run.saturating_sub(1), session.last_digest),
    };
    Ok(TrainOutcome {
        checkpoint_dir: config.output_dir.join("checkpoint"),
        digest,
        epochs_run,
        best_epoch,
        best_valid_mrr,
        history: session.history,
    })
}
