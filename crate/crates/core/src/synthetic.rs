//! Bundled toy graph and a deterministic generator for WordNet-shaped surrogate graphs.
//!
//! Surrogate entities belong to latent classes. Every description carries two of
//! its class's three signature words plus filler words. Each `(head, relation)`
//! group points at several members of one target class: usually a class fixed
//! per relation and head class, and otherwise a class private to that head which
//! the text cannot reveal but the group's other tails can.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, SplitTexts};
use crate::rng::{self, domain};

const TOY_TRAIN: &str = include_str!("../fixtures/toy/train.txt");
const TOY_VALID: &str = include_str!("../fixtures/toy/valid.txt");
const TOY_TEST: &str = include_str!("../fixtures/toy/test.txt");
const TOY_DESCRIPTIONS: &str = include_str!("../fixtures/toy/descriptions.tsv");

/// Relation names of the WordNet-derived benchmark family.
pub const WORDNET_RELATIONS: [&str; 9] = [
    "_hypernym",
    "_derivationally_related_form",
    "_member_meronym",
    "_has_part",
    "_instance_hypernym",
    "_synset_domain_topic_of",
    "_also_see",
    "_verb_group",
    "_similar_to",
];

/// The 30-triple toy graph (20 train, 5 valid, 5 test) with descriptions.
pub fn toy_dataset() -> Result<Dataset> {
    let origin = Path::new("toy");
    Dataset::from_tsv(
        SplitTexts {
            origin,
            train: TOY_TRAIN,
            valid: Some(TOY_VALID),
            test: Some(TOY_TEST),
            descriptions: Some((TOY_DESCRIPTIONS, Path::new("toy/descriptions.tsv"))),
            relation_text: None,
        },
        None,
    )
}

/// Writes the toy graph as a raw TSV directory.
pub fn write_toy_raw(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [
        ("train.txt", TOY_TRAIN),
        ("valid.txt", TOY_VALID),
        ("test.txt", TOY_TEST),
        ("descriptions.tsv", TOY_DESCRIPTIONS),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub entities: usize,
    pub classes: usize,
    pub relations: usize,
    /// Number of `(head, relation)` groups.
    pub groups: usize,
    /// Inclusive range of tails per group.
    pub tails_per_group: (usize, usize),
    /// Share of groups whose target class is private to the head.
    pub hidden_share: f64,
    /// Share of groups holding one triple out for validation.
    pub valid_share: f64,
    /// Share of groups holding one triple out for testing.
    pub test_share: f64,
    pub filler_words: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Sized like the first inductive WordNet split: 2746 entities, 9 relations,
    /// roughly 5.4k training, 630 validation and 640 test triples.
    pub fn wordnet_v1_like(seed: u64) -> Self {
        SyntheticSpec {
            entities: 2746,
            classes: 60,
            relations: 9,
            groups: 2000,
            tails_per_group: (2, 5),
            hidden_share: 0.5,
            valid_share: 0.315,
            test_share: 0.32,
            filler_words: 4,
            seed,
        }
    }

    /// A small graph for quick experiments and tests.
    pub fn small(seed: u64) -> Self {
        SyntheticSpec {
            entities: 240,
            classes: 16,
            relations: 4,
            groups: 260,
            tails_per_group: (2, 5),
            hidden_share: 0.5,
            valid_share: 0.2,
            test_share: 0.4,
            filler_words: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.tails_per_group;
        if self.entities < 2 * self.classes || self.classes < 2 {
            return Err(Error::Config("need at least two classes and two entities per class".into()));
        }
        if self.relations == 0 || self.relations > WORDNET_RELATIONS.len() {
            return Err(Error::Config(format!("relations must be in 1..={}", WORDNET_RELATIONS.len())));
        }
        if lo < 2 || hi < lo || hi >= self.entities / self.classes {
            return Err(Error::Config("tails per group must be at least 2 and below the class size".into()));
        }
        if self.groups > self.entities * self.relations || self.groups == 0 {
            return Err(Error::Config("group count out of range".into()));
        }
        let shares = [self.hidden_share, self.valid_share, self.test_share];
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) || self.valid_share + self.test_share > 1.0 {
            return Err(Error::Config("shares must lie in [0, 1] and held-out shares sum to at most 1".into()));
        }
        Ok(())
    }
}

fn pseudo_word<R: rand::Rng>(rng: &mut R, syllables: usize) -> String {
    const C: &[u8] = b"bcdfghklmnprstvz";
    const V: &[u8] = b"aeiou";
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(C[rng.random_range(0..C.len())] as char);
        w.push(V[rng.random_range(0..V.len())] as char);
    }
    w
}

fn distinct_words<R: rand::Rng>(rng: &mut R, n: usize, syllables: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = pseudo_word(rng, syllables);
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Generates a surrogate graph as a raw-directory-shaped [`Dataset`].
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    let texts = generate_texts(spec)?;
    Dataset::from_tsv(
        SplitTexts {
            origin: Path::new("synthetic"),
            train: &texts.train,
            valid: Some(&texts.valid),
            test: Some(&texts.test),
            descriptions: Some((&texts.descriptions, Path::new("synthetic/descriptions.tsv"))),
            relation_text: None,
        },
        None,
    )
}

/// Writes a surrogate graph as a raw TSV directory.
pub fn write_raw(spec: &SyntheticSpec, dir: &Path) -> Result<()> {
    let texts = generate_texts(spec)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [
        ("train.txt", &texts.train),
        ("valid.txt", &texts.valid),
        ("test.txt", &texts.test),
        ("descriptions.tsv", &texts.descriptions),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

struct Texts {
    train: String,
    valid: String,
    test: String,
    descriptions: String,
}

fn generate_texts(spec: &SyntheticSpec) -> Result<Texts> {
    spec.validate()?;
    let mut g = rng::stream(spec.seed, domain::SYNTHETIC, 0);
    let mut taken = HashSet::new();
    let signatures: Vec<Vec<String>> = (0..spec.classes)
        .map(|_| distinct_words(&mut g, 3, 3, &mut taken))
        .collect();
    let filler = distinct_words(&mut g, 200, 2, &mut taken);
    let lemmas = distinct_words(&mut g, spec.entities, 2, &mut taken);

    let mut class_of: Vec<usize> = (0..spec.entities).map(|e| e % spec.classes).collect();
    class_of.shuffle(&mut g);
    let mut members = vec![Vec::new(); spec.classes];
    for (e, &c) in class_of.iter().enumerate() {
        members[c].push(e);
    }
    let names: Vec<String> = lemmas.iter().enumerate().map(|(i, l)| format!("{l}_NN_{}", i % 3 + 1)).collect();

    let mut description_lines = Vec::with_capacity(spec.entities);
    for e in 0..spec.entities {
        let sig = &signatures[class_of[e]];
        let skip = g.random_range(0..3);
        let mut words: Vec<&str> = sig.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, w)| w.as_str()).collect();
        for _ in 0..spec.filler_words {
            words.push(&filler[g.random_range(0..filler.len())]);
        }
        words.shuffle(&mut g);
        description_lines.push(format!("{}\t{}\t{}\n", names[e], lemmas[e], words.join(" ")));
    }

    let relation_maps: Vec<Vec<usize>> = (0..spec.relations)
        .map(|_| {
            let mut p: Vec<usize> = (0..spec.classes).collect();
            p.shuffle(&mut g);
            p
        })
        .collect();

    let mut used = BTreeSet::new();
    let mut mentioned = vec![false; spec.entities];
    let (mut train, mut valid, mut test) = (String::new(), String::new(), String::new());
    let mut attempts = 0;
    while used.len() < spec.groups {
        attempts += 1;
        if attempts > spec.groups * 100 {
            return Err(Error::Config("could not place the requested number of groups".into()));
        }
        let head = g.random_range(0..spec.entities);
        let rel = g.random_range(0..spec.relations);
        if !used.insert((head, rel)) {
            continue;
        }
        let target = if g.random_bool(spec.hidden_share) {
            g.random_range(0..spec.classes)
        } else {
            relation_maps[rel][class_of[head]]
        };
        let pool: Vec<usize> = members[target].iter().copied().filter(|&e| e != head).collect();
        let m = g.random_range(spec.tails_per_group.0..=spec.tails_per_group.1).min(pool.len());
        let tails: Vec<usize> = pool.choose_multiple(&mut g, m).copied().collect();
        let held = g.random::<f64>();
        for (i, &t) in tails.iter().enumerate() {
            let line = format!("{}\t{}\t{}\n", names[head], WORDNET_RELATIONS[rel], names[t]);
            mentioned[head] = true;
            mentioned[t] = true;
            let dest = if i == 0 && held < spec.test_share {
                &mut test
            } else if i == 0 && held < spec.test_share + spec.valid_share {
                &mut valid
            } else {
                &mut train
            };
            dest.push_str(&line);
        }
    }
    // entities outside every triple get no description line
    let descriptions = description_lines
        .into_iter()
        .zip(&mentioned)
        .filter_map(|(line, &m)| m.then_some(line))
        .collect();
    Ok(Texts {
        train,
        valid,
        test,
        descriptions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AdjacencyIndex;

    #[test]
    fn toy_counts() {
        let ds = toy_dataset().unwrap();
        assert_eq!((ds.train.len(), ds.valid.len(), ds.test.len()), (20, 5, 5));
        assert_eq!(ds.relations().len(), 3);
        assert!(ds.descriptions.entity(crate::graph::EntityId(0)).description.contains("canine"));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&SyntheticSpec::small(3)).unwrap();
        let b = generate(&SyntheticSpec::small(3)).unwrap();
        let c = generate(&SyntheticSpec::small(4)).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.descriptions, b.descriptions);
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn held_out_queries_keep_training_siblings() {
        let ds = generate(&SyntheticSpec::small(1)).unwrap();
        let index = AdjacencyIndex::build(&ds.train);
        for t in ds.test.triples() {
            assert!(!index.relation_aware_neighbors(t.head, t.relation).is_empty());
        }
    }

    #[test]
    fn wordnet_sized_counts() {
        let ds = generate(&SyntheticSpec::wordnet_v1_like(0)).unwrap();
        assert_eq!(ds.relations().len(), 9);
        assert!(ds.entities().len() <= 2746);
        assert!((4800..6200).contains(&ds.train.len()), "{}", ds.train.len());
        assert!((500..800).contains(&ds.valid.len()), "{}", ds.valid.len());
        assert!((500..800).contains(&ds.test.len()), "{}", ds.test.len());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = SyntheticSpec::small(0);
        s.relations = 10;
        assert!(generate(&s).is_err());
        let mut s = SyntheticSpec::small(0);
        s.tails_per_group = (1, 3);
        assert!(generate(&s).is_err());
    }
}
