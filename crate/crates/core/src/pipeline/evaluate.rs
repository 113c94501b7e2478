use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anchoring::{AblationMode, HashingTokenizer, Renderer};
use crate::config::RunConfig;
use crate::encoders::{Checkpoint, Model};
use crate::error::{Error, Result};
use crate::evaluation::{
    both_directions, embed_all_entities, export_embeddings, rank_queries, BiEncoderScorer, MetricsReport,
    RankingResult, Scorer, TripleScorer,
};
use crate::graph::{AdjacencyIndex, Dataset, EntityId, KnownTriples, RelationId, Split, Triple};
use crate::parallel::Exec;

/// Ranks `queries` against every entity with the given model and anchor graph.
#[allow(clippy::too_many_arguments)]
pub fn rank_with_model(
    model: &Model,
    config: &RunConfig,
    dataset: &Dataset,
    index: &AdjacencyIndex,
    queries: &[Triple],
    known: &KnownTriples,
    candidate_mask: Option<Vec<bool>>,
    exec: Exec,
) -> Result<Vec<RankingResult>> {
    with_scorer(model, config, dataset, index, candidate_mask, exec, |scorer| {
        rank_queries(scorer, queries, known, config.top_m, exec)
    })
}

fn with_scorer<T>(
    model: &Model,
    config: &RunConfig,
    dataset: &Dataset,
    index: &AdjacencyIndex,
    candidate_mask: Option<Vec<bool>>,
    exec: Exec,
    f: impl FnOnce(&dyn Scorer) -> Result<T>,
) -> Result<T> {
    match model {
        Model::BiEncoder(m) => {
            let tokenizer = HashingTokenizer::new(m.query.vocab_size());
            let renderer = Renderer::new(&dataset.descriptions, &tokenizer, config.max_seq_len);
            let table = embed_all_entities(&m.candidate, &renderer, dataset.entities().len(), exec)?;
            let scorer = BiEncoderScorer {
                model: m,
                table,
                index,
                renderer: &renderer,
                mode: config.mode,
                k: config.k,
                seed: config.seed,
                candidate_mask,
            };
            f(&scorer)
        }
        Model::Triple(m) => {
            if candidate_mask.is_some() {
                return Err(Error::Config(
                    "inductive evaluation needs the text bi-encoder; triple models have no rows for unseen entities".into(),
                ));
            }
            if m.entity_count() != dataset.entities().len() {
                return Err(Error::Data(format!(
                    "checkpoint has {} entity rows but the dataset has {} entities",
                    m.entity_count(),
                    dataset.entities().len()
                )));
            }
            let scorer = TripleScorer {
                model: m,
                index,
                mode: config.mode,
                k: config.k,
                seed: config.seed,
                tau: config.tau,
            };
            f(&scorer)
        }
    }
}

/// Filtered evaluation of one split in both query directions. With `inductive`
/// the queries, anchor graph, filter and candidate set come from that dataset.
pub fn evaluate_model(
    model: &Model,
    config: &RunConfig,
    dataset: &Dataset,
    split: Split,
    inductive: Option<&Dataset>,
    exec: Exec,
) -> Result<(MetricsReport, Vec<RankingResult>)> {
    let graph = inductive.unwrap_or(dataset);
    let queries = both_directions(graph.split(split).triples());
    let known = KnownTriples::from_stores([&graph.train, &graph.valid, &graph.test]);
    let index = AdjacencyIndex::build(&graph.train);
    let mask = inductive.map(|g| {
        let mut keep = vec![false; g.entities().len()];
        for store in [&g.train, &g.valid, &g.test] {
            for t in store.triples() {
                keep[t.head.index()] = true;
                keep[t.tail.index()] = true;
            }
        }
        keep
    });
    let results = rank_with_model(model, config, graph, &index, &queries, &known, mask, exec)?;
    let report = MetricsReport::from_results(&results, graph.relations(), split.as_str(), config);
    Ok((report, results))
}

#[derive(Clone, Debug, Default)]
pub struct EvaluateOptions {
    pub checkpoint: PathBuf,
    /// Overrides the dataset recorded in the checkpoint.
    pub dataset: Option<PathBuf>,
    pub split: Option<Split>,
    pub mode: Option<AblationMode>,
    pub k: Option<usize>,
    /// Raw directory of an unseen graph for inductive evaluation.
    pub inductive: Option<PathBuf>,
    /// Directory for `metrics.json`, `metrics.csv` and `rankings.jsonl`.
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct EvaluateOutcome {
    pub report: MetricsReport,
    pub results: Vec<RankingResult>,
    pub written: Vec<PathBuf>,
}

fn effective_config(manifest_config: &RunConfig, dataset: Option<&PathBuf>, mode: Option<AblationMode>, k: Option<usize>) -> Result<RunConfig> {
    let mut config = manifest_config.clone();
    if let Some(d) = dataset {
        config.dataset = d.clone();
    }
    if let Some(m) = mode {
        config.mode = m;
    }
    if let Some(k) = k {
        config.k = k;
    }
    config.validate()?;
    Ok(config)
}

pub fn evaluate(opts: &EvaluateOptions, exec: Exec) -> Result<EvaluateOutcome> {
    let (ckpt, digest) = Checkpoint::load(&opts.checkpoint)?;
    let config = effective_config(&ckpt.manifest.config, opts.dataset.as_ref(), opts.mode, opts.k)?;
    let dataset = Dataset::load(&config.dataset)?;
    let inductive = opts
        .inductive
        .as_ref()
        .map(|dir| Dataset::load_raw(dir, Some((dataset.entities(), dataset.relations()))))
        .transpose()?;
    let split = opts.split.unwrap_or(Split::Test);
    log::info!("evaluating checkpoint {digest} on {} ({})", split.as_str(), config.mode);
    let (report, results) = evaluate_model(&ckpt.model, &config, &dataset, split, inductive.as_ref(), exec)?;

    let mut written = Vec::new();
    if let Some(dir) = &opts.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let graph = inductive.as_ref().unwrap_or(&dataset);
        let json = dir.join("metrics.json");
        fs::write(&json, report.to_json()).map_err(|e| Error::io(&json, e))?;
        let csv = dir.join("metrics.csv");
        fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let rankings = dir.join("rankings.jsonl");
        let mut text = String::new();
        for r in &results {
            text.push_str(&serde_json::to_string(&named_ranking(graph, r))?);
            text.push('\n');
        }
        fs::write(&rankings, text).map_err(|e| Error::io(&rankings, e))?;
        written.extend([json, csv, rankings]);
    }
    Ok(EvaluateOutcome {
        report,
        results,
        written,
    })
}

fn entity_name(ds: &Dataset, e: EntityId) -> String {
    ds.entities().name(e.0).unwrap_or("?").to_string()
}

fn relation_name(ds: &Dataset, r: RelationId) -> String {
    let base = ds.relations().name(r.index() as u32).unwrap_or("?");
    if r.is_inverse() {
        format!("{base}^-1")
    } else {
        base.to_string()
    }
}

fn named_ranking(ds: &Dataset, r: &RankingResult) -> serde_json::Value {
    serde_json::json!({
        "head": entity_name(ds, r.head),
        "relation": relation_name(ds, r.relation),
        "gold": entity_name(ds, r.gold),
        "rank": r.rank,
        "gold_score": r.gold_score,
        "top": r.top.iter().map(|(e, s)| (entity_name(ds, *e), *s)).collect::<Vec<_>>(),
    })
}

#[derive(Clone, Debug, Default)]
pub struct PredictOptions {
    pub checkpoint: PathBuf,
    pub dataset: Option<PathBuf>,
    pub head: String,
    /// Relation name; a `^-1` suffix selects the inverse direction.
    pub relation: String,
    pub top_m: Option<usize>,
    pub mode: Option<AblationMode>,
    pub k: Option<usize>,
    /// Drop candidates already known as tails of the query.
    pub filter_known: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub head: String,
    pub relation: String,
    pub anchors: Vec<String>,
    pub candidates: Vec<(String, f64)>,
}

/// Top-m tails for a single `(head, relation, ?)` query.
pub fn predict(opts: &PredictOptions, exec: Exec) -> Result<Prediction> {
    let (ckpt, _) = Checkpoint::load(&opts.checkpoint)?;
    let mut config = effective_config(&ckpt.manifest.config, opts.dataset.as_ref(), opts.mode, opts.k)?;
    if let Some(m) = opts.top_m {
        config.top_m = m;
    }
    let dataset = Dataset::load(&config.dataset)?;
    let head = dataset
        .entities()
        .get(&opts.head)
        .map(EntityId)
        .ok_or_else(|| Error::Data(format!("unknown entity {:?}", opts.head)))?;
    let (name, inverse) = match opts.relation.strip_suffix("^-1") {
        Some(base) => (base, true),
        None => (opts.relation.as_str(), false),
    };
    let base = dataset
        .relations()
        .get(name)
        .ok_or_else(|| Error::Data(format!("unknown relation {name:?}")))?;
    let relation = if inverse {
        RelationId::forward(base).inverse()
    } else {
        RelationId::forward(base)
    };
    let index = AdjacencyIndex::build(&dataset.train);
    let known = KnownTriples::from_stores([&dataset.train, &dataset.valid, &dataset.test]);
    let (scores, anchors) = with_scorer(&ckpt.model, &config, &dataset, &index, None, exec, |s| {
        Ok((s.scores(head, relation)?, s.anchors(head, relation)?))
    })?;
    let filtered: HashSet<usize> = if opts.filter_known {
        (0..scores.len()).filter(|&e| known.contains(head, relation, EntityId(e as u32))).collect()
    } else {
        HashSet::new()
    };
    let masked: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| if filtered.contains(&i) { f64::NEG_INFINITY } else { s })
        .collect();
    let top = crate::evaluation::top_candidates(&masked, config.top_m);
    Ok(Prediction {
        head: opts.head.clone(),
        relation: relation_name(&dataset, relation),
        anchors: anchors.anchors.iter().map(|&a| entity_name(&dataset, a)).collect(),
        candidates: top.into_iter().map(|(e, s)| (entity_name(&dataset, e), s)).collect(),
    })
}

/// Writes candidate-side entity embeddings (entity rows for triple models) as TSV.
pub fn export_entity_embeddings(checkpoint: &Path, dataset: Option<&Path>, path: &Path, exec: Exec) -> Result<usize> {
    let (ckpt, _) = Checkpoint::load(checkpoint)?;
    let config = effective_config(&ckpt.manifest.config, dataset.map(Path::to_path_buf).as_ref(), None, None)?;
    let ds = Dataset::load(&config.dataset)?;
    let rows: Vec<Vec<f64>> = match &ckpt.model {
        Model::BiEncoder(m) => {
            let tokenizer = HashingTokenizer::new(m.query.vocab_size());
            let renderer = Renderer::new(&ds.descriptions, &tokenizer, config.max_seq_len);
            embed_all_entities(&m.candidate, &renderer, ds.entities().len(), exec)?
                .rows
                .into_iter()
                .map(|e| e.values().to_vec())
                .collect()
        }
        Model::Triple(m) => (0..m.entity_count()).map(|e| m.entity_row(EntityId(e as u32)).to_vec()).collect(),
    };
    let comment = format!("config: {}", serde_json::to_string(&config)?);
    export_embeddings(path, Some(&comment), ds.entities().names(), &rows)?;
    Ok(rows.len())
}
