use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::EntityId;

/// Upper bound on the anchor sample size.
pub const MAX_ANCHORS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchorSet {
    pub anchors: Vec<EntityId>,
    pub requested_k: usize,
    /// Set when the pool (after exclusion) was empty.
    pub fallback: bool,
}

impl AnchorSet {
    pub fn empty(requested_k: usize, fallback: bool) -> Self {
        AnchorSet {
            anchors: Vec::new(),
            requested_k,
            fallback,
        }
    }

    pub fn effective_k(&self) -> usize {
        self.anchors.len()
    }
}

/// Uniform sample of `min(k, |pool \ {exclude}|)` distinct members of `pool`.
pub fn sample_anchors<R: Rng + ?Sized>(
    pool: &[EntityId],
    k: usize,
    rng: &mut R,
    exclude: Option<EntityId>,
) -> Result<AnchorSet> {
    if k > MAX_ANCHORS {
        return Err(Error::Config(format!(
            "anchor sample size {k} exceeds the cap of {MAX_ANCHORS}"
        )));
    }
    let candidates: Vec<EntityId> = pool
        .iter()
        .copied()
        .filter(|&e| Some(e) != exclude)
        .collect();
    if candidates.is_empty() {
        return Ok(AnchorSet::empty(k, true));
    }
    let take = k.min(candidates.len());
    let anchors = rand::seq::index::sample(rng, candidates.len(), take)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    Ok(AnchorSet {
        anchors,
        requested_k: k,
        fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::collections::HashSet;

    fn ids(v: &[u32]) -> Vec<EntityId> {
        v.iter().map(|&i| EntityId(i)).collect()
    }

    #[test]
    fn clamps_to_pool() {
        let mut r = rng::stream(1, 0, 0);
        let s = sample_anchors(&ids(&[0, 1]), 5, &mut r, None).unwrap();
        let got: HashSet<_> = s.anchors.iter().copied().collect();
        assert_eq!(got, ids(&[0, 1]).into_iter().collect());
        assert_eq!(s.effective_k(), 2);
        assert!(!s.fallback);
    }

    #[test]
    fn seed_seven_draws_two_distinct() {
        let pool = ids(&[10, 11, 12]);
        let a = sample_anchors(&pool, 2, &mut rng::stream(7, 0, 0), None).unwrap();
        let b = sample_anchors(&pool, 2, &mut rng::stream(7, 0, 0), None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.anchors.len(), 2);
        assert_ne!(a.anchors[0], a.anchors[1]);
        assert!(a.anchors.iter().all(|e| pool.contains(e)));
    }

    #[test]
    fn every_pair_is_reachable_and_roughly_uniform() {
        // enumerate 3000 seeds; each of the 3 unordered pairs should show up ~1/3 of the time
        let pool = ids(&[0, 1, 2]);
        let mut counts = std::collections::HashMap::new();
        for seed in 0..3000 {
            let mut s = sample_anchors(&pool, 2, &mut rng::stream(seed, 0, 0), None)
                .unwrap()
                .anchors;
            s.sort();
            *counts.entry(s).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        for &c in counts.values() {
            assert!((850..1150).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn empty_pool_is_fallback() {
        let s = sample_anchors(&[], 4, &mut rng::stream(0, 0, 0), None).unwrap();
        assert!(s.fallback);
        assert!(s.anchors.is_empty());
        let only_gold = sample_anchors(&ids(&[3]), 4, &mut rng::stream(0, 0, 0), Some(EntityId(3))).unwrap();
        assert!(only_gold.fallback);
    }

    #[test]
    fn exclusion_and_cap() {
        for seed in 0..50 {
            let s = sample_anchors(&ids(&[1, 2, 3, 4]), 3, &mut rng::stream(seed, 0, 0), Some(EntityId(2)))
                .unwrap();
            assert!(!s.anchors.contains(&EntityId(2)));
            assert_eq!(s.anchors.len(), 3);
        }
        assert!(matches!(
            sample_anchors(&ids(&[1]), 6, &mut rng::stream(0, 0, 0), None),
            Err(Error::Config(_))
        ));
    }
}
