use crate::anchoring::{build_query_bundle, AblationMode, AnchorSet, Renderer};
use crate::encoders::{
    anchor_enhanced_embedding, anchor_prototype, dot, AnchorEnhancedEmbedding, BiEncoder, Embedding, TextEncoder,
    TripleModel,
};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyIndex, EntityId, RelationId};
use crate::parallel::Exec;
use crate::rng::{self, domain};
use crate::training::{anchor_pool, cosine_with_grads};
use crate::anchoring::sample_anchors;

/// Scores every candidate tail of a query. Masked candidates score `-∞`.
pub trait Scorer: Sync {
    fn entity_count(&self) -> usize;
    fn scores(&self, head: EntityId, relation: RelationId) -> Result<Vec<f64>>;
    /// Anchors used for the query, for inspection.
    fn anchors(&self, head: EntityId, relation: RelationId) -> Result<AnchorSet>;
}

/// Candidate-encoder embeddings of every entity.
#[derive(Clone, Debug, PartialEq)]
pub struct EntityTable {
    pub rows: Vec<Embedding>,
}

pub fn embed_all_entities(encoder: &TextEncoder, renderer: &Renderer<'_>, count: usize, exec: Exec) -> Result<EntityTable> {
    let rows = exec.try_map_range(count, |i| encoder.encode(&renderer.candidate(EntityId(i as u32))))?;
    Ok(EntityTable { rows })
}

/// Inference anchors depend only on the run seed and the query, so repeated
/// queries see the same anchors.
pub fn inference_rng(seed: u64, head: EntityId, relation: RelationId) -> rng::Rng {
    rng::stream(
        seed,
        domain::INFERENCE_ANCHORS,
        rng::pair(u64::from(head.0), u64::from(relation.to_bits())),
    )
}

/// Everything needed to score queries with the text bi-encoder.
pub struct BiEncoderScorer<'a> {
    pub model: &'a BiEncoder,
    pub table: EntityTable,
    pub index: &'a AdjacencyIndex,
    pub renderer: &'a Renderer<'a>,
    pub mode: AblationMode,
    pub k: usize,
    pub seed: u64,
    /// Candidates allowed to rank; `None` admits every entity.
    pub candidate_mask: Option<Vec<bool>>,
}

/// Classic and anchor-enhanced query embeddings.
#[derive(Clone, Debug)]
pub struct QueryEmbeddings {
    pub classic: Embedding,
    pub enhanced: AnchorEnhancedEmbedding,
    pub anchors: AnchorSet,
}

impl BiEncoderScorer<'_> {
    pub fn query(&self, head: EntityId, relation: RelationId) -> Result<QueryEmbeddings> {
        let mut g = inference_rng(self.seed, head, relation);
        let bundle = build_query_bundle(self.index, self.renderer, head, relation, None, false, self.mode, self.k, &mut g)?;
        let classic = self.model.query.encode(&bundle.classic)?;
        let per_anchor = bundle
            .anchor_sequences
            .iter()
            .map(|s| self.model.query.encode(s))
            .collect::<Result<Vec<_>>>()?;
        let enhanced = anchor_enhanced_embedding(&per_anchor, &classic)?;
        Ok(QueryEmbeddings {
            classic,
            enhanced,
            anchors: bundle.anchors,
        })
    }
}

fn apply_mask(scores: &mut [f64], mask: Option<&Vec<bool>>) {
    if let Some(mask) = mask {
        for (s, &keep) in scores.iter_mut().zip(mask) {
            if !keep {
                *s = f64::NEG_INFINITY;
            }
        }
    }
}

impl Scorer for BiEncoderScorer<'_> {
    fn entity_count(&self) -> usize {
        self.table.rows.len()
    }

    fn scores(&self, head: EntityId, relation: RelationId) -> Result<Vec<f64>> {
        let q = self.query(head, relation)?;
        let mut out: Vec<f64> = self
            .table
            .rows
            .iter()
            .map(|e| {
                let mut s = 0.0;
                if self.mode.scores_anchor() {
                    s += dot(q.enhanced.embedding.values(), e.values());
                }
                if self.mode.scores_classic() {
                    s += dot(q.classic.values(), e.values());
                }
                s
            })
            .collect();
        if out.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numerical("non-finite candidate score".into()));
        }
        apply_mask(&mut out, self.candidate_mask.as_ref());
        Ok(out)
    }

    fn anchors(&self, head: EntityId, relation: RelationId) -> Result<AnchorSet> {
        Ok(self.query(head, relation)?.anchors)
    }
}

/// TransE or ComplEx, optionally with the anchor prototype term
/// `cos(prototype, e_t) / τ` added to the model score.
pub struct TripleScorer<'a> {
    pub model: &'a TripleModel,
    pub index: &'a AdjacencyIndex,
    pub mode: AblationMode,
    pub k: usize,
    pub seed: u64,
    pub tau: f64,
}

impl Scorer for TripleScorer<'_> {
    fn entity_count(&self) -> usize {
        self.model.entity_count()
    }

    fn scores(&self, head: EntityId, relation: RelationId) -> Result<Vec<f64>> {
        self.model.check_entity(head)?;
        let proto = if self.mode.scores_anchor() {
            anchor_prototype(self.model, &self.anchors(head, relation)?)
        } else {
            None
        };
        let out: Vec<f64> = (0..self.model.entity_count())
            .map(|t| {
                let t = EntityId(t as u32);
                let mut s = 0.0;
                if self.mode.scores_classic() || proto.is_none() {
                    s += self.model.score(head, relation, t);
                }
                if let Some(p) = &proto {
                    s += cosine_with_grads(p, self.model.entity_row(t)).0 / self.tau;
                }
                s
            })
            .collect();
        if out.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numerical("non-finite candidate score".into()));
        }
        Ok(out)
    }

    fn anchors(&self, head: EntityId, relation: RelationId) -> Result<AnchorSet> {
        let pool = anchor_pool(self.index, head, relation, self.mode);
        if pool.is_empty() && self.mode == AblationMode::NT {
            return Ok(AnchorSet::empty(self.k, false));
        }
        sample_anchors(&pool, self.k, &mut inference_rng(self.seed, head, relation), None)
    }
}
