use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::store::split_file;
use super::{parse_triples, DescriptionTable, Split, TripleStore, Vocab};
use crate::error::{Error, Result};

const MANIFEST: &str = "dataset.json";
const DESCRIPTION_FILES: [&str; 3] = ["descriptions.tsv", "entities.tsv", "entity2text.tsv"];
const RELATION_TEXT_FILE: &str = "relations.tsv";

/// Train/valid/test stores sharing one vocabulary, plus entity text.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub train: TripleStore,
    pub valid: TripleStore,
    pub test: TripleStore,
    pub descriptions: DescriptionTable,
}

/// Raw split contents; `origin` only labels parse errors.
#[derive(Clone, Copy, Debug)]
pub struct SplitTexts<'a> {
    pub origin: &'a Path,
    pub train: &'a str,
    pub valid: Option<&'a str>,
    pub test: Option<&'a str>,
    pub descriptions: Option<(&'a str, &'a Path)>,
    pub relation_text: Option<&'a str>,
}

#[derive(Serialize, Deserialize)]
struct DatasetManifest {
    format: String,
    version: u32,
    train: usize,
    valid: usize,
    test: usize,
    entities: usize,
    relations: usize,
}

impl Dataset {
    pub fn entities(&self) -> &Vocab {
        self.train.entities()
    }

    pub fn relations(&self) -> &Vocab {
        self.train.relations()
    }

    pub fn split(&self, split: Split) -> &TripleStore {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Loads either a prepared directory (has `dataset.json`) or a raw TSV directory.
    pub fn load(dir: &Path) -> Result<Self> {
        if dir.join(MANIFEST).is_file() {
            Self::load_prepared(dir)
        } else {
            Self::load_raw(dir, None)
        }
    }

    /// Reads `train/valid/test.{txt,tsv}` and an optional description file. With
    /// `base` the handles of an existing vocabulary are kept and new names appended.
    pub fn load_raw(dir: &Path, base: Option<(&Vocab, &Vocab)>) -> Result<Self> {
        let read = |path: &Path| fs::read_to_string(path).map_err(|e| Error::io(path, e));
        let train_path = split_file(dir, Split::Train)
            .ok_or_else(|| Error::Data(format!("{}: no train.txt or train.tsv", dir.display())))?;
        let train = read(&train_path)?;
        let valid = split_file(dir, Split::Valid).map(|p| read(&p)).transpose()?;
        let test = split_file(dir, Split::Test).map(|p| read(&p)).transpose()?;
        let descriptions = match description_file(dir) {
            Some(path) => Some((read(&path)?, path)),
            None => {
                log::warn!(
                    "{}: no description file, using entity names with empty descriptions",
                    dir.display()
                );
                None
            }
        };
        let rel_path = dir.join(RELATION_TEXT_FILE);
        let relation_text = if rel_path.is_file() { Some(read(&rel_path)?) } else { None };
        Self::from_tsv(
            SplitTexts {
                origin: dir,
                train: &train,
                valid: valid.as_deref(),
                test: test.as_deref(),
                descriptions: descriptions.as_ref().map(|(t, p)| (t.as_str(), p.as_path())),
                relation_text: relation_text.as_deref(),
            },
            base,
        )
    }

    /// Builds a dataset from in-memory TSV text laid out like the raw directory files.
    pub fn from_tsv(texts: SplitTexts<'_>, base: Option<(&Vocab, &Vocab)>) -> Result<Self> {
        let origin = |split: Split| texts.origin.join(format!("{}.txt", split.as_str()));
        let train = parse_triples(texts.train, &origin(Split::Train), Split::Train, base)?;
        let parse_optional = |text: Option<&str>, split: Split, vocab: (&Vocab, &Vocab)| -> Result<TripleStore> {
            match text.filter(|t| !t.trim().is_empty()) {
                Some(text) => parse_triples(text, &origin(split), split, Some(vocab)),
                None => TripleStore::new(split, vec![], vocab.0.clone(), vocab.1.clone()),
            }
        };
        let valid = parse_optional(texts.valid, Split::Valid, (train.entities(), train.relations()))?;
        let test = parse_optional(texts.test, Split::Test, (valid.entities(), valid.relations()))?;
        let (entities, relations) = (test.entities().clone(), test.relations().clone());
        let train = train.with_vocab(&entities, &relations)?;
        let valid = valid.with_vocab(&entities, &relations)?;

        let mut descriptions = DescriptionTable::fallback(&entities, &relations);
        if let Some((text, path)) = texts.descriptions {
            descriptions.merge_text(text, path, &entities)?;
        }
        if let Some(text) = texts.relation_text {
            descriptions.merge_relation_text(text, &relations);
        }
        Ok(Dataset {
            train,
            valid,
            test,
            descriptions,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for store in [&self.train, &self.valid, &self.test] {
            store.save(dir, store.split().as_str())?;
        }
        let desc_path = dir.join(DESCRIPTION_FILES[0]);
        fs::write(&desc_path, self.descriptions.to_tsv(self.entities()))
            .map_err(|e| Error::io(&desc_path, e))?;
        let rel_path = dir.join(RELATION_TEXT_FILE);
        fs::write(&rel_path, self.descriptions.relations_to_tsv(self.relations()))
            .map_err(|e| Error::io(&rel_path, e))?;
        let manifest = DatasetManifest {
            format: "raa-prepared".into(),
            version: 1,
            train: self.train.len(),
            valid: self.valid.len(),
            test: self.test.len(),
            entities: self.entities().len(),
            relations: self.relations().len(),
        };
        let path = dir.join(MANIFEST);
        fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }

    fn load_prepared(dir: &Path) -> Result<Self> {
        let train = TripleStore::load_serialized(dir, "train")?;
        let valid = TripleStore::load_serialized(dir, "valid")?;
        let test = TripleStore::load_serialized(dir, "test")?;
        if train.entities() != test.entities() || valid.entities() != test.entities() {
            return Err(Error::Data(format!("{}: split vocabularies differ", dir.display())));
        }
        let mut descriptions = DescriptionTable::fallback(train.entities(), train.relations());
        let desc_path = dir.join(DESCRIPTION_FILES[0]);
        if desc_path.is_file() {
            let text = fs::read_to_string(&desc_path).map_err(|e| Error::io(&desc_path, e))?;
            descriptions.merge_text(&text, &desc_path, train.entities())?;
        }
        let rel_path = dir.join(RELATION_TEXT_FILE);
        if rel_path.is_file() {
            let text = fs::read_to_string(&rel_path).map_err(|e| Error::io(&rel_path, e))?;
            descriptions.merge_relation_text(&text, train.relations());
        }
        Ok(Dataset {
            train,
            valid,
            test,
            descriptions,
        })
    }
}

fn description_file(dir: &Path) -> Option<PathBuf> {
    DESCRIPTION_FILES.iter().map(|f| dir.join(f)).find(|p| p.is_file())
}
