use std::fs;
use std::path::Path;

use super::{EntityId, RelationId, Vocab};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntityText {
    pub name: String,
    pub description: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DescriptionStats {
    pub unknown_entities: usize,
    pub duplicates: usize,
}

/// Names and descriptions for every entity plus surface text for every base relation.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptionTable {
    entities: Vec<EntityText>,
    relations: Vec<String>,
    stats: DescriptionStats,
}

/// `_has_part` renders as `has part`.
pub fn relation_surface(name: &str) -> String {
    name.split(['_', ' '])
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

impl DescriptionTable {
    /// Vocabulary strings as names, empty descriptions.
    pub fn fallback(entities: &Vocab, relations: &Vocab) -> Self {
        DescriptionTable {
            entities: entities
                .names()
                .iter()
                .map(|n| EntityText {
                    name: n.clone(),
                    description: String::new(),
                })
                .collect(),
            relations: relations.names().iter().map(|n| relation_surface(n)).collect(),
            stats: DescriptionStats::default(),
        }
    }

    pub fn stats(&self) -> DescriptionStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity(&self, id: EntityId) -> &EntityText {
        &self.entities[id.index()]
    }

    pub fn relation_text(&self, relation: RelationId) -> String {
        let base = &self.relations[relation.index()];
        if relation.is_inverse() {
            format!("inverse {base}")
        } else {
            base.clone()
        }
    }

    pub fn set_relation_text(&mut self, relation: usize, text: impl Into<String>) {
        self.relations[relation] = text.into();
    }

    /// Adds fallback entries for vocabulary entries appended after the table was built.
    pub fn extend_to(&mut self, entities: &Vocab, relations: &Vocab) {
        for name in &entities.names()[self.entities.len().min(entities.len())..] {
            self.entities.push(EntityText {
                name: name.clone(),
                description: String::new(),
            });
        }
        for name in &relations.names()[self.relations.len().min(relations.len())..] {
            self.relations.push(relation_surface(name));
        }
    }

    /// Merges `entity<TAB>name<TAB>description` lines. Unknown entities are skipped
    /// and counted; later duplicates overwrite earlier ones.
    pub fn merge_text(&mut self, text: &str, origin: &Path, entities: &Vocab) -> Result<()> {
        let mut seen = vec![false; self.entities.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let key = fields.next().unwrap_or_default();
            let Some(name) = fields.next() else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: lineno + 1,
                    message: "expected entity<TAB>name<TAB>description".into(),
                });
            };
            let description = fields.next().unwrap_or_default();
            let Some(id) = entities.get(key) else {
                self.stats.unknown_entities += 1;
                continue;
            };
            let slot = id as usize;
            if seen[slot] {
                self.stats.duplicates += 1;
            }
            seen[slot] = true;
            self.entities[slot] = EntityText {
                name: name.trim().to_owned(),
                description: description.trim().to_owned(),
            };
        }
        if self.stats.unknown_entities > 0 {
            log::warn!(
                "{}: skipped {} lines for entities outside the vocabulary",
                origin.display(),
                self.stats.unknown_entities
            );
        }
        Ok(())
    }

    /// Writes the table back in the description file format.
    pub fn to_tsv(&self, entities: &Vocab) -> String {
        let mut out = String::new();
        for (key, text) in entities.names().iter().zip(&self.entities) {
            out.push_str(key);
            out.push('\t');
            out.push_str(&text.name.replace(['\t', '\n'], " "));
            out.push('\t');
            out.push_str(&text.description.replace(['\t', '\n'], " "));
            out.push('\n');
        }
        out
    }

    pub fn relations_to_tsv(&self, relations: &Vocab) -> String {
        relations
            .names()
            .iter()
            .zip(&self.relations)
            .map(|(k, v)| format!("{k}\t{v}\n"))
            .collect()
    }

    /// Merges optional `relation<TAB>surface text` lines.
    pub fn merge_relation_text(&mut self, text: &str, relations: &Vocab) {
        for line in text.lines() {
            if let Some((key, value)) = line.split_once('\t') {
                if let Some(id) = relations.get(key) {
                    self.relations[id as usize] = value.trim().to_owned();
                }
            }
        }
    }
}

pub fn load_descriptions(path: &Path, entities: &Vocab, relations: &Vocab) -> Result<DescriptionTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = DescriptionTable::fallback(entities, relations);
    table.merge_text(&text, path, entities)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(names: &[&str]) -> Vocab {
        Vocab::from(names.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }

    #[test]
    fn lines_map_and_missing_fall_back() {
        let ents = vocab(&["e1", "e2_NN_1"]);
        let rels = vocab(&["_has_part"]);
        let mut t = DescriptionTable::fallback(&ents, &rels);
        t.merge_text("e1\tEurope\ta continent\n", Path::new("d"), &ents).unwrap();
        assert_eq!(
            t.entity(EntityId(0)),
            &EntityText {
                name: "Europe".into(),
                description: "a continent".into()
            }
        );
        // names are kept verbatim, sense suffix included
        assert_eq!(t.entity(EntityId(1)).name, "e2_NN_1");
        assert_eq!(t.entity(EntityId(1)).description, "");
    }

    #[test]
    fn duplicates_and_unknowns_are_counted() {
        let ents = vocab(&["e1"]);
        let rels = vocab(&["r"]);
        let mut t = DescriptionTable::fallback(&ents, &rels);
        t.merge_text("e1\ta\tfirst\nzz\tq\tw\ne1\tb\tsecond\n", Path::new("d"), &ents)
            .unwrap();
        assert_eq!(t.entity(EntityId(0)).name, "b");
        assert_eq!(t.entity(EntityId(0)).description, "second");
        assert_eq!(
            t.stats(),
            DescriptionStats {
                unknown_entities: 1,
                duplicates: 1
            }
        );
    }

    #[test]
    fn relation_text_and_inverse_rendering() {
        let ents = vocab(&["e"]);
        let rels = vocab(&["_has_part", "locatedIn"]);
        let t = DescriptionTable::fallback(&ents, &rels);
        let r = RelationId::forward(0);
        assert_eq!(t.relation_text(r), "has part");
        assert_eq!(t.relation_text(r.inverse()), "inverse has part");
        assert_eq!(t.relation_text(RelationId::forward(1)), "locatedIn");
    }

    #[test]
    fn extension_adds_fallback_rows() {
        let mut ents = vocab(&["a"]);
        let rels = vocab(&["r"]);
        let mut t = DescriptionTable::fallback(&ents, &rels);
        ents.intern("new_entity");
        t.extend_to(&ents, &rels);
        assert_eq!(t.len(), 2);
        assert_eq!(t.entity(EntityId(1)).name, "new_entity");
    }
}
