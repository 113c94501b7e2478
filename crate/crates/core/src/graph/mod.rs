//! Triple storage, entity text, and the relation-aware adjacency index.

mod dataset;
mod descriptions;
mod index;
mod store;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dataset::{Dataset, SplitTexts};
pub use descriptions::{load_descriptions, DescriptionStats, DescriptionTable, EntityText};
pub use index::{AdjacencyIndex, KnownTriples};
pub use store::{augment_inverse, load_triples, parse_triples, Split, TripleStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A relation handle. `index` addresses the base relation vocabulary; the
/// inverse flag distinguishes `r` from `r⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId {
    index: u32,
    inverse: bool,
}

const INVERSE_BIT: u32 = 1 << 31;

impl RelationId {
    pub fn forward(index: u32) -> Self {
        debug_assert!(index & INVERSE_BIT == 0);
        RelationId {
            index,
            inverse: false,
        }
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn is_inverse(self) -> bool {
        self.inverse
    }

    pub fn inverse(self) -> Self {
        RelationId {
            index: self.index,
            inverse: !self.inverse,
        }
    }

    /// Position in a table that stores forward relations first, then inverses.
    pub fn dense(self, base_count: usize) -> usize {
        self.index as usize + if self.inverse { base_count } else { 0 }
    }

    pub fn to_bits(self) -> u32 {
        self.index | if self.inverse { INVERSE_BIT } else { 0 }
    }

    pub fn from_bits(bits: u32) -> Self {
        RelationId {
            index: bits & !INVERSE_BIT,
            inverse: bits & INVERSE_BIT != 0,
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "r{}^-1", self.index)
        } else {
            write!(f, "r{}", self.index)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }

    pub fn inverse(self) -> Self {
        Triple {
            head: self.tail,
            relation: self.relation.inverse(),
            tail: self.head,
        }
    }
}

/// Bidirectional string/handle map with first-seen handle assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, handle: u32) -> Option<&str> {
        self.names.get(handle as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        id
    }

    /// True when `self` is a prefix of `other` (same handles, possibly more entries).
    pub fn is_prefix_of(&self, other: &Vocab) -> bool {
        self.names.len() <= other.names.len()
            && self.names.iter().zip(&other.names).all(|(a, b)| a == b)
    }
}

impl From<Vec<String>> for Vocab {
    fn from(names: Vec<String>) -> Self {
        let mut vocab = Vocab::new();
        for name in &names {
            vocab.intern(name);
        }
        vocab
    }
}

impl From<Vocab> for Vec<String> {
    fn from(vocab: Vocab) -> Self {
        vocab.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_is_an_involution() {
        let r = RelationId::forward(3);
        assert_eq!(r.inverse().inverse(), r);
        assert!(r.inverse().is_inverse());
        assert_eq!(RelationId::from_bits(r.inverse().to_bits()), r.inverse());
        assert_eq!(r.inverse().dense(5), 8);
    }

    #[test]
    fn vocab_is_first_seen() {
        let mut v = Vocab::new();
        assert_eq!(v.intern("b"), 0);
        assert_eq!(v.intern("a"), 1);
        assert_eq!(v.intern("b"), 0);
        assert_eq!(v.name(1), Some("a"));
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.get("a"), Some(1));
    }
}
