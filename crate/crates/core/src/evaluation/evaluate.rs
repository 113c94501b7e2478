use super::rank::{filtered_rank, top_candidates, RankingResult};
use super::scorer::Scorer;
use crate::error::Result;
use crate::graph::{KnownTriples, Triple};
use crate::parallel::Exec;

/// Expands each triple into its tail query and its inverse (head) query.
pub fn both_directions(triples: &[Triple]) -> Vec<Triple> {
    triples.iter().flat_map(|&t| [t, t.inverse()]).collect()
}

/// Filtered ranks of the gold tail for every query, in input order.
pub fn rank_queries(
    scorer: &dyn Scorer,
    queries: &[Triple],
    known: &KnownTriples,
    top_m: usize,
    exec: Exec,
) -> Result<Vec<RankingResult>> {
    exec.try_map_range(queries.len(), |i| {
        let q = queries[i];
        let scores = scorer.scores(q.head, q.relation)?;
        let rank = filtered_rank(&scores, q.tail, |e| known.contains(q.head, q.relation, e))?;
        Ok(RankingResult {
            head: q.head,
            relation: q.relation,
            gold: q.tail,
            rank,
            gold_score: scores[q.tail.index()],
            top: top_candidates(&scores, top_m),
        })
    })
}
