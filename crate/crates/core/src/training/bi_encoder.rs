use crate::anchoring::{build_query_bundle, AblationMode, QueryBundle, Renderer, TokenSequence};
use crate::config::RunConfig;
use crate::encoders::{
    anchor_enhanced_embedding, normalize_backward, BiEncoder, Embedding, EncoderTrace, Gradients, TextEncoderGrads,
};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyIndex, Triple};
use crate::parallel::Exec;
use crate::rng::{self, domain};

use super::batch::{batch_objective, BatchEmbeddings, NegativeSets};
use super::loss::LossBreakdown;
use super::optimizer::OptimizerState;

/// Lower and upper bound on the learned temperature.
pub const TAU_RANGE: (f64, f64) = (1e-4, 1e2);

/// Selects at compile time whether the anchor pathway exists in the trainer.
pub trait AnchorPathway: Send + Sync + 'static {
    const COMPILED: bool;
}

/// Full trainer with anchor sampling and the anchor-enhanced objective.
pub struct AnchorsEnabled;

/// Trainer with every anchor code path removed by monomorphization.
pub struct AnchorsCompiledOut;

impl AnchorPathway for AnchorsEnabled {
    const COMPILED: bool = true;
}

impl AnchorPathway for AnchorsCompiledOut {
    const COMPILED: bool = false;
}

/// Rendered inputs of one training triple.
#[derive(Clone, Debug)]
pub struct TrainingItem {
    pub triple: Triple,
    pub query: QueryBundle,
    pub tail: TokenSequence,
    pub head: TokenSequence,
}

/// Whether the anchor term participates in training for this pathway and config.
pub fn anchor_term_active<P: AnchorPathway>(config: &RunConfig) -> bool {
    P::COMPILED && config.anchor_objective_active()
}

/// Renders a batch. Anchors are drawn from a per-position stream, excluding the gold tail.
pub fn assemble_batch<P: AnchorPathway>(
    index: &AdjacencyIndex,
    renderer: &Renderer<'_>,
    triples: &[Triple],
    config: &RunConfig,
    epoch: usize,
    offset: usize,
) -> Result<Vec<TrainingItem>> {
    if config.in_batch_negatives && triples.len() < 2 {
        return Err(Error::Config(format!(
            "in-batch negatives need at least 2 items per batch, got {}",
            triples.len()
        )));
    }
    let active = anchor_term_active::<P>(config);
    triples
        .iter()
        .enumerate()
        .map(|(i, &triple)| {
            let query = if active {
                let mut g = rng::stream(
                    config.seed,
                    domain::TRAIN_ANCHORS,
                    rng::pair(epoch as u64, (offset + i) as u64),
                );
                build_query_bundle(
                    index,
                    renderer,
                    triple.head,
                    triple.relation,
                    Some(triple.tail),
                    true,
                    config.mode,
                    config.k,
                    &mut g,
                )?
            } else {
                let mut unused = rng::stream(config.seed, domain::TRAIN_ANCHORS, 0);
                build_query_bundle(
                    index,
                    renderer,
                    triple.head,
                    triple.relation,
                    Some(triple.tail),
                    true,
                    AblationMode::NT,
                    config.k,
                    &mut unused,
                )?
            };
            Ok(TrainingItem {
                triple,
                query,
                tail: renderer.candidate(triple.tail),
                head: renderer.candidate(triple.head),
            })
        })
        .collect()
}

/// Splits `n` items into batches of `size`, folding a trailing singleton into the
/// previous batch so every batch can supply in-batch negatives.
pub fn batch_ranges(n: usize, size: usize) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<std::ops::Range<usize>> = (0..n).step_by(size.max(1)).map(|s| s..(s + size).min(n)).collect();
    if out.len() > 1 && out.last().is_some_and(|r| r.len() == 1) {
        let last = out.pop().unwrap();
        out.last_mut().unwrap().end = last.end;
    }
    out
}

struct ItemForward {
    classic: EncoderTrace,
    anchors: Vec<EncoderTrace>,
    enhanced: Option<(Embedding, usize, f64)>,
    tail: EncoderTrace,
    head: EncoderTrace,
}

/// Loss, dense gradients and the norm of the gradient reaching the per-anchor embeddings.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub loss: LossBreakdown,
    pub gradients: Gradients,
    pub anchor_gradient_norm: f64,
}

/// Forward and backward pass of `L_cls` over one batch. Pure: the model is not modified.
pub fn loss_and_gradients<P: AnchorPathway>(
    model: &BiEncoder,
    items: &[TrainingItem],
    config: &RunConfig,
    exec: Exec,
) -> Result<StepOutput> {
    let active = anchor_term_active::<P>(config);
    let tau = model.tau();
    let forwards: Vec<ItemForward> = exec.try_map_range(items.len(), |i| {
        let item = &items[i];
        let classic = model.query.forward(&item.query.classic)?;
        let mut anchors = Vec::new();
        let mut enhanced = None;
        if P::COMPILED && active {
            anchors = item
                .query
                .anchor_sequences
                .iter()
                .map(|s| model.query.forward(s))
                .collect::<Result<Vec<_>>>()?;
            let outs: Vec<Embedding> = anchors.iter().map(|t| t.output().clone()).collect();
            let e = anchor_enhanced_embedding(&outs, classic.output())?;
            enhanced = Some((e.embedding, e.source_count, e.mean_norm));
        }
        Ok::<_, Error>(ItemForward {
            classic,
            anchors,
            enhanced,
            tail: model.candidate.forward(&item.tail)?,
            head: model.candidate.forward(&item.head)?,
        })
    })?;

    let heads: Vec<_> = items.iter().map(|it| it.triple.head).collect();
    let golds: Vec<_> = items.iter().map(|it| it.triple.tail).collect();
    let negatives = NegativeSets::build(&heads, &golds, config.in_batch_negatives)?;
    let rows = |f: &dyn Fn(&ItemForward) -> &[f64]| forwards.iter().map(|x| f(x).to_vec()).collect::<Vec<_>>();
    let emb = BatchEmbeddings {
        queries: rows(&|x| x.classic.output().values()),
        enhanced: if active {
            rows(&|x| x.enhanced.as_ref().map(|e| e.0.values()).unwrap_or(&[]))
        } else {
            Vec::new()
        },
        tails: rows(&|x| x.tail.output().values()),
        heads: rows(&|x| x.head.output().values()),
    };
    let (loss, g) = batch_objective(&emb, &negatives, config.margin, tau, config.alpha, active)?;

    let dim = model.dim();
    let per_item: Vec<(TextEncoderGrads, TextEncoderGrads, f64)> = exec.map_range(items.len(), |i| {
        let f = &forwards[i];
        let mut gq = TextEncoderGrads::zeros(dim);
        let mut gc = TextEncoderGrads::zeros(dim);
        let mut d_classic = g.queries[i].clone();
        let mut anchor_norm = 0.0;
        if P::COMPILED && active {
            let (unit, count, mean_norm) = f.enhanced.as_ref().expect("anchor forward present");
            if *count == 0 {
                for (a, b) in d_classic.iter_mut().zip(&g.enhanced[i]) {
                    *a += b;
                }
            } else {
                let d_mean = normalize_backward(unit.values(), *mean_norm, &g.enhanced[i]);
                let d_each: Vec<f64> = d_mean.iter().map(|v| v / *count as f64).collect();
                anchor_norm = d_each.iter().map(|v| v * v).sum::<f64>().sqrt() * *count as f64;
                for trace in &f.anchors {
                    model.query.backward(trace, &d_each, &mut gq);
                }
            }
        }
        model.query.backward(&f.classic, &d_classic, &mut gq);
        model.candidate.backward(&f.tail, &g.tails[i], &mut gc);
        model.candidate.backward(&f.head, &g.heads[i], &mut gc);
        (gq, gc, anchor_norm)
    });
    let mut gq = TextEncoderGrads::zeros(dim);
    let mut gc = TextEncoderGrads::zeros(dim);
    let mut anchor_gradient_norm = 0.0;
    for (q, c, a) in &per_item {
        gq.add_assign(q);
        gc.add_assign(c);
        anchor_gradient_norm += a;
    }
    Ok(StepOutput {
        loss,
        gradients: model.dense_gradients(&gq, &gc, g.log_tau),
        anchor_gradient_norm,
    })
}

/// One optimizer step. The temperature is clamped to [`TAU_RANGE`] afterwards.
pub fn train_step<P: AnchorPathway>(
    model: &mut BiEncoder,
    optimizer: &mut OptimizerState,
    items: &[TrainingItem],
    config: &RunConfig,
    exec: Exec,
) -> Result<LossBreakdown> {
    let out = loss_and_gradients::<P>(model, items, config, exec)?;
    if !out.loss.combined.is_finite() {
        return Err(Error::Numerical(format!("loss became {}", out.loss.combined)));
    }
    optimizer.update(model, &out.gradients)?;
    let (lo, hi) = TAU_RANGE;
    model.log_tau = f64::from(model.log_tau.clamp(lo.ln(), hi.ln()) as f32);
    Ok(out.loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_ranges_fold_singletons() {
        assert_eq!(batch_ranges(10, 4), vec![0..4, 4..8, 8..10]);
        assert_eq!(batch_ranges(9, 4), vec![0..4, 4..9]);
        assert_eq!(batch_ranges(1, 4), vec![0..1]);
        assert_eq!(batch_ranges(0, 4), Vec::<std::ops::Range<usize>>::new());
    }
}
