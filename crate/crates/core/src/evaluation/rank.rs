use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, RelationId};

/// Rank of `gold` among all candidates whose score is at least the gold score,
/// skipping candidates for which `is_filtered` holds (other known true tails).
/// Ties count against the gold entity. Candidates scored `-∞` are masked out.
pub fn filtered_rank(scores: &[f64], gold: EntityId, is_filtered: impl Fn(EntityId) -> bool) -> Result<usize> {
    let g = *scores
        .get(gold.index())
        .ok_or_else(|| Error::Data(format!("gold entity {} outside the candidate set", gold.0)))?;
    if g.is_nan() {
        return Err(Error::Numerical("gold score is NaN".into()));
    }
    if g == f64::NEG_INFINITY {
        return Err(Error::Data(format!("gold entity {} is masked out", gold.0)));
    }
    let mut rank = 1;
    for (i, &s) in scores.iter().enumerate() {
        if i == gold.index() || s == f64::NEG_INFINITY {
            continue;
        }
        if s.is_nan() {
            return Err(Error::Numerical(format!("candidate {i} scored NaN")));
        }
        let e = EntityId(i as u32);
        if s >= g && !is_filtered(e) {
            rank += 1;
        }
    }
    Ok(rank)
}

/// The `m` best candidates, ties broken by lower handle; masked candidates are skipped.
pub fn top_candidates(scores: &[f64], m: usize) -> Vec<(EntityId, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > f64::NEG_INFINITY).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(m);
    order.into_iter().map(|i| (EntityId(i as u32), scores[i])).collect()
}

/// Outcome of one ranked query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub head: EntityId,
    pub relation: RelationId,
    pub gold: EntityId,
    pub rank: usize,
    pub gold_score: f64,
    pub top: Vec<(EntityId, f64)>,
}
