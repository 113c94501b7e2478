use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EntityId, RelationId, Triple, Vocab};
use crate::error::{Error, Result};

const STORE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "dev" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

/// An immutable list of triples together with the vocabularies its handles index.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleStore {
    split: Split,
    triples: Vec<Triple>,
    entities: Vocab,
    relations: Vocab,
    inverse_augmented: bool,
    duplicates_dropped: usize,
}

impl TripleStore {
    pub fn new(split: Split, triples: Vec<Triple>, entities: Vocab, relations: Vocab) -> Result<Self> {
        let store = TripleStore {
            split,
            triples,
            entities,
            relations,
            inverse_augmented: false,
            duplicates_dropped: 0,
        };
        store.validate()?;
        Ok(store)
    }

    fn validate(&self) -> Result<()> {
        let ne = self.entities.len();
        let nr = self.relations.len();
        for t in &self.triples {
            if t.head.index() >= ne || t.tail.index() >= ne || t.relation.index() >= nr {
                return Err(Error::Data(format!(
                    "triple ({}, {}, {}) references a handle outside the vocabulary",
                    t.head.0, t.relation, t.tail.0
                )));
            }
            if t.relation.is_inverse() && !self.inverse_augmented {
                return Err(Error::Data("inverse relation in a non-augmented store".into()));
            }
        }
        Ok(())
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn entities(&self) -> &Vocab {
        &self.entities
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn inverse_augmented(&self) -> bool {
        self.inverse_augmented
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    /// Number of relation handles in use: base relations, doubled once augmented.
    pub fn relation_handle_count(&self) -> usize {
        self.relations.len() * if self.inverse_augmented { 2 } else { 1 }
    }

    /// Rebinds the store to a vocabulary that extends the current one.
    pub fn with_vocab(mut self, entities: &Vocab, relations: &Vocab) -> Result<Self> {
        if !self.entities.is_prefix_of(entities) || !self.relations.is_prefix_of(relations) {
            return Err(Error::Data("replacement vocabulary does not extend the store's".into()));
        }
        self.entities = entities.clone();
        self.relations = relations.clone();
        Ok(self)
    }

    pub fn resolve(&self, head: &str, relation: &str, tail: &str) -> Option<Triple> {
        Some(Triple::new(
            EntityId(self.entities.get(head)?),
            RelationId::forward(self.relations.get(relation)?),
            EntityId(self.entities.get(tail)?),
        ))
    }

    /// Writes `<stem>.json` (manifest with vocabularies) and `<stem>.bin`
    /// (little-endian u32 triples, row-major head/relation/tail).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = StoreManifest {
            format_version: STORE_FORMAT_VERSION,
            split: self.split,
            triple_count: self.triples.len(),
            entity_count: self.entities.len(),
            relation_count: self.relations.len(),
            inverse_augmented: self.inverse_augmented,
            duplicates_dropped: self.duplicates_dropped,
            entities: self.entities.clone(),
            relations: self.relations.clone(),
        };
        let manifest_path = dir.join(format!("{stem}.json"));
        let json = serde_json::to_vec_pretty(&manifest)?;
        fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;

        let mut bytes = Vec::with_capacity(self.triples.len() * 12);
        for t in &self.triples {
            bytes.extend_from_slice(&t.head.0.to_le_bytes());
            bytes.extend_from_slice(&t.relation.to_bits().to_le_bytes());
            bytes.extend_from_slice(&t.tail.0.to_le_bytes());
        }
        let bin_path = dir.join(format!("{stem}.bin"));
        fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))
    }

    pub fn load_serialized(dir: &Path, stem: &str) -> Result<Self> {
        let manifest_path = dir.join(format!("{stem}.json"));
        let raw = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: StoreManifest = serde_json::from_slice(&raw)?;
        if manifest.format_version != STORE_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported store format version {}",
                manifest_path.display(),
                manifest.format_version
            )));
        }
        let bin_path = dir.join(format!("{stem}.bin"));
        let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
        if bytes.len() != manifest.triple_count * 12 {
            return Err(Error::Data(format!(
                "{}: expected {} bytes, found {}",
                bin_path.display(),
                manifest.triple_count * 12,
                bytes.len()
            )));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap());
        let triples = (0..manifest.triple_count)
            .map(|row| {
                Triple::new(
                    EntityId(word(row * 3)),
                    RelationId::from_bits(word(row * 3 + 1)),
                    EntityId(word(row * 3 + 2)),
                )
            })
            .collect();
        let store = TripleStore {
            split: manifest.split,
            triples,
            entities: manifest.entities,
            relations: manifest.relations,
            inverse_augmented: manifest.inverse_augmented,
            duplicates_dropped: manifest.duplicates_dropped,
        };
        store.validate()?;
        Ok(store)
    }
}

#[derive(Serialize, Deserialize)]
struct StoreManifest {
    format_version: u32,
    split: Split,
    triple_count: usize,
    entity_count: usize,
    relation_count: usize,
    inverse_augmented: bool,
    duplicates_dropped: usize,
    entities: Vocab,
    relations: Vocab,
}

/// Parses `head<TAB>relation<TAB>tail` lines. Handles extend `vocab` in first-seen order.
pub fn parse_triples(
    text: &str,
    origin: &Path,
    split: Split,
    vocab: Option<(&Vocab, &Vocab)>,
) -> Result<TripleStore> {
    let (mut entities, mut relations) = match vocab {
        Some((e, r)) => (e.clone(), r.clone()),
        None => (Vocab::new(), Vocab::new()),
    };
    let mut triples = Vec::new();
    let mut seen = HashSet::new();
    let mut duplicates = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let (h, r, t) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        if h.is_empty() || r.is_empty() || t.is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message: "empty field".into(),
            });
        }
        let triple = Triple::new(
            EntityId(entities.intern(h)),
            RelationId::forward(relations.intern(r)),
            EntityId(entities.intern(t)),
        );
        if seen.insert(triple) {
            triples.push(triple);
        } else {
            duplicates += 1;
        }
    }
    if triples.is_empty() {
        return Err(Error::Data(format!("{}: no triples", origin.display())));
    }
    if duplicates > 0 {
        log::warn!("{}: dropped {duplicates} duplicate triples", origin.display());
    }
    Ok(TripleStore {
        split,
        triples,
        entities,
        relations,
        inverse_augmented: false,
        duplicates_dropped: duplicates,
    })
}

pub fn load_triples(path: &Path, split: Split, vocab: Option<(&Vocab, &Vocab)>) -> Result<TripleStore> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let store = parse_triples(&text, path, split, vocab)?;
    log::info!("{}: {} triples", path.display(), store.len());
    Ok(store)
}

/// Appends `(t, r⁻¹, h)` for every stored `(h, r, t)`, in the original order.
pub fn augment_inverse(store: &TripleStore) -> Result<TripleStore> {
    if store.inverse_augmented {
        return Err(Error::Data(format!(
            "{} store is already inverse-augmented",
            store.split.as_str()
        )));
    }
    let mut triples = Vec::with_capacity(store.triples.len() * 2);
    triples.extend_from_slice(&store.triples);
    triples.extend(store.triples.iter().map(|t| t.inverse()));
    Ok(TripleStore {
        triples,
        inverse_augmented: true,
        ..store.clone()
    })
}

pub(crate) fn split_file(dir: &Path, split: Split) -> Option<PathBuf> {
    ["txt", "tsv"]
        .iter()
        .map(|ext| dir.join(format!("{}.{ext}", split.as_str())))
        .find(|p| p.is_file())
}
