use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::render::{Renderer, TokenSequence};
use super::sampler::{sample_anchors, AnchorSet};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyIndex, EntityId, RelationId};

/// Which query embeddings take part in scoring.
///
/// * `NT`: classic query only.
/// * `NRT`: anchors drawn from tails of the head under the other relations.
/// * `IET`: anchor-enhanced embedding only at inference.
/// * `IRT`: both, anchors from the relation-aware set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AblationMode {
    NT,
    NRT,
    IET,
    #[default]
    IRT,
}

impl AblationMode {
    pub fn uses_anchors(self) -> bool {
        self != AblationMode::NT
    }

    pub fn scores_classic(self) -> bool {
        self != AblationMode::IET
    }

    pub fn scores_anchor(self) -> bool {
        self != AblationMode::NT
    }

    pub const ALL: [AblationMode; 4] = [
        AblationMode::NT,
        AblationMode::NRT,
        AblationMode::IET,
        AblationMode::IRT,
    ];
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AblationMode::NT => "NT",
            AblationMode::NRT => "NRT",
            AblationMode::IET => "IET",
            AblationMode::IRT => "IRT",
        };
        f.write_str(s)
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NT" => Ok(AblationMode::NT),
            "NRT" => Ok(AblationMode::NRT),
            "IET" => Ok(AblationMode::IET),
            "IRT" => Ok(AblationMode::IRT),
            other => Err(Error::Config(format!("unknown mode {other:?} (NT, NRT, IET, IRT)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryBundle {
    pub head: EntityId,
    pub relation: RelationId,
    pub gold_tail: Option<EntityId>,
    pub classic: TokenSequence,
    /// One sequence per anchor; empty on fallback.
    pub anchor_sequences: Vec<TokenSequence>,
    pub anchors: AnchorSet,
}

impl QueryBundle {
    pub fn is_fallback(&self) -> bool {
        self.anchor_sequences.is_empty()
    }
}

/// Samples anchors for `(head, relation)` from `index` according to `mode` and
/// renders the classic and per-anchor sequences. With `exclude_gold` the gold
/// tail is removed from the pool (training).
#[allow(clippy::too_many_arguments)]
pub fn build_query_bundle<R: Rng + ?Sized>(
    index: &AdjacencyIndex,
    renderer: &Renderer<'_>,
    head: EntityId,
    relation: RelationId,
    gold: Option<EntityId>,
    exclude_gold: bool,
    mode: AblationMode,
    k: usize,
    rng: &mut R,
) -> Result<QueryBundle> {
    let classic = renderer.classic_query(head, relation);
    let exclude = if exclude_gold { gold } else { None };
    let anchors = match mode {
        AblationMode::NT => {
            if k > super::MAX_ANCHORS {
                return Err(Error::Config(format!("anchor sample size {k} exceeds the cap")));
            }
            AnchorSet::empty(k, false)
        }
        AblationMode::NRT => {
            let pool = index.other_relation_tails(head, relation);
            sample_anchors(&pool, k, rng, exclude)?
        }
        AblationMode::IET | AblationMode::IRT => {
            sample_anchors(index.relation_aware_neighbors(head, relation), k, rng, exclude)?
        }
    };
    let anchor_sequences = anchors
        .anchors
        .iter()
        .map(|&a| renderer.anchor_query(head, relation, a))
        .collect();
    Ok(QueryBundle {
        head,
        relation,
        gold_tail: gold,
        classic,
        anchor_sequences,
        anchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchoring::HashingTokenizer;
    use crate::graph::{parse_triples, DescriptionTable, Split, TripleStore};
    use crate::rng;
    use std::path::Path;

    struct Fixture {
        store: TripleStore,
        index: AdjacencyIndex,
        table: DescriptionTable,
        tok: HashingTokenizer,
    }

    fn fixture() -> Fixture {
        let store = parse_triples(
            "e\thasPart\tg\ne\thasPart\ts\ne\tlocIn\tx\nq\thasPart\tg\n",
            Path::new("toy"),
            Split::Train,
            None,
        )
        .unwrap();
        let index = AdjacencyIndex::build(&store);
        let table = DescriptionTable::fallback(store.entities(), store.relations());
        Fixture {
            store,
            index,
            table,
            tok: HashingTokenizer::new(1000),
        }
    }

    fn e(f: &Fixture, n: &str) -> EntityId {
        EntityId(f.store.entities().get(n).unwrap())
    }

    #[test]
    fn modes_shape_the_bundle() {
        let f = fixture();
        let r = Renderer::new(&f.table, &f.tok, 64);
        let has_part = RelationId::forward(0);
        let mut g = rng::stream(3, 0, 0);

        let nt = build_query_bundle(&f.index, &r, e(&f, "e"), has_part, None, false, AblationMode::NT, 4, &mut g).unwrap();
        assert!(nt.anchor_sequences.is_empty());
        assert!(!nt.anchors.fallback);

        let irt = build_query_bundle(&f.index, &r, e(&f, "e"), has_part, None, false, AblationMode::IRT, 4, &mut g).unwrap();
        assert_eq!(irt.anchor_sequences.len(), 2);
        let mut got = irt.anchors.anchors.clone();
        got.sort();
        assert_eq!(got, vec![e(&f, "g"), e(&f, "s")]);
        assert!(irt.anchor_sequences.iter().all(|s| s.separator_count() == 3));
        assert_eq!(irt.classic.separator_count(), 2);

        let nrt = build_query_bundle(&f.index, &r, e(&f, "e"), has_part, None, false, AblationMode::NRT, 4, &mut g).unwrap();
        assert_eq!(nrt.anchors.anchors, vec![e(&f, "x")]);

        // q only has tails under hasPart
        let nrt_empty = build_query_bundle(&f.index, &r, e(&f, "q"), has_part, None, false, AblationMode::NRT, 4, &mut g).unwrap();
        assert!(nrt_empty.anchors.fallback);
        assert!(nrt_empty.is_fallback());
    }

    #[test]
    fn training_bundles_exclude_gold() {
        let f = fixture();
        let r = Renderer::new(&f.table, &f.tok, 64);
        for seed in 0..20 {
            let b = build_query_bundle(
                &f.index, &r, e(&f, "e"), RelationId::forward(0), Some(e(&f, "g")), true,
                AblationMode::IRT, 4, &mut rng::stream(seed, 0, 0),
            )
            .unwrap();
            assert_eq!(b.anchors.anchors, vec![e(&f, "s")]);
        }
    }

    #[test]
    fn bundles_are_deterministic() {
        let f = fixture();
        let r = Renderer::new(&f.table, &f.tok, 64);
        let build = |seed| {
            build_query_bundle(&f.index, &r, e(&f, "e"), RelationId::forward(0), None, false,
                AblationMode::IRT, 1, &mut rng::stream(seed, 0, 9)).unwrap()
        };
        assert_eq!(build(11), build(11));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("irt".parse::<AblationMode>().unwrap(), AblationMode::IRT);
        assert!("xyz".parse::<AblationMode>().is_err());
        assert!(!AblationMode::IET.scores_classic());
        assert!(!AblationMode::NT.scores_anchor());
    }
}
