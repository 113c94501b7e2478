use std::collections::{HashMap, HashSet};

use super::{EntityId, RelationId, Triple, TripleStore};

/// Membership set used by the filtered ranking protocol.
#[derive(Clone, Debug, Default)]
pub struct KnownTriples {
    set: HashSet<Triple>,
}

impl KnownTriples {
    /// Collects every stored triple and its inverse.
    pub fn from_stores<'a>(stores: impl IntoIterator<Item = &'a TripleStore>) -> Self {
        let mut set = HashSet::new();
        for store in stores {
            for &t in store.triples() {
                set.insert(t);
                set.insert(t.inverse());
            }
        }
        KnownTriples { set }
    }

    pub fn contains(&self, head: EntityId, relation: RelationId, tail: EntityId) -> bool {
        self.set.contains(&Triple::new(head, relation, tail))
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

/// `(head, relation) → sorted tails` over `G ∪ G_inv` of one graph.
#[derive(Clone, Debug, Default)]
pub struct AdjacencyIndex {
    tails: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    // per head, (relation, tail) sorted
    edges: HashMap<EntityId, Vec<(RelationId, EntityId)>>,
}

impl AdjacencyIndex {
    /// Indexes `graph`; inverse edges are added when the store is not augmented already.
    pub fn build(graph: &TripleStore) -> Self {
        let mut tails: HashMap<(EntityId, RelationId), Vec<EntityId>> = HashMap::new();
        let mut edges: HashMap<EntityId, Vec<(RelationId, EntityId)>> = HashMap::new();
        let mut add = |t: Triple| {
            tails.entry((t.head, t.relation)).or_default().push(t.tail);
            edges.entry(t.head).or_default().push((t.relation, t.tail));
        };
        for &t in graph.triples() {
            add(t);
            if !graph.inverse_augmented() {
                add(t.inverse());
            }
        }
        for list in tails.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        for list in edges.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        AdjacencyIndex { tails, edges }
    }

    /// The relation-aware entity set of `(head, relation)`; empty when unknown.
    pub fn relation_aware_neighbors(&self, head: EntityId, relation: RelationId) -> &[EntityId] {
        self.tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Tails reached from `head` through any relation other than `relation`, sorted, deduplicated.
    pub fn other_relation_tails(&self, head: EntityId, relation: RelationId) -> Vec<EntityId> {
        let mut out: Vec<EntityId> = self
            .edges
            .get(&head)
            .into_iter()
            .flatten()
            .filter(|(r, _)| *r != relation)
            .map(|&(_, t)| t)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn group_count(&self) -> usize {
        self.tails.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{augment_inverse, parse_triples, Split};
    use std::path::Path;

    fn toy() -> TripleStore {
        parse_triples(
            "e\thasPart\tg\ne\thasPart\ts\ne\tlocIn\tx\n",
            Path::new("toy"),
            Split::Train,
            None,
        )
        .unwrap()
    }

    fn id(s: &TripleStore, name: &str) -> EntityId {
        EntityId(s.entities().get(name).unwrap())
    }

    #[test]
    fn hand_enumerated_neighbors() {
        let store = toy();
        let index = AdjacencyIndex::build(&augment_inverse(&store).unwrap());
        let has_part = RelationId::forward(store.relations().get("hasPart").unwrap());
        assert_eq!(
            index.relation_aware_neighbors(id(&store, "e"), has_part),
            &[id(&store, "g"), id(&store, "s")]
        );
        assert_eq!(
            index.relation_aware_neighbors(id(&store, "g"), has_part.inverse()),
            &[id(&store, "e")]
        );
        assert!(index
            .relation_aware_neighbors(id(&store, "x"), has_part)
            .is_empty());
        assert_eq!(
            index.other_relation_tails(id(&store, "e"), has_part),
            vec![id(&store, "x")]
        );
    }

    #[test]
    fn unaugmented_store_gets_inverse_edges() {
        let store = toy();
        let a = AdjacencyIndex::build(&store);
        let b = AdjacencyIndex::build(&augment_inverse(&store).unwrap());
        assert_eq!(a.group_count(), b.group_count());
    }

    #[test]
    fn known_triples_cover_both_directions() {
        let store = toy();
        let known = KnownTriples::from_stores([&store]);
        let has_part = RelationId::forward(0);
        assert!(known.contains(id(&store, "e"), has_part, id(&store, "g")));
        assert!(known.contains(id(&store, "g"), has_part.inverse(), id(&store, "e")));
        assert_eq!(known.len(), 6);
    }
}
