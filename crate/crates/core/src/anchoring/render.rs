use serde::{Deserialize, Serialize};

use super::tokenizer::{Tokenizer, BEGIN, SEPARATOR};
use crate::graph::{DescriptionTable, EntityId, RelationId};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub truncated: bool,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn separator_count(&self) -> usize {
        self.ids.iter().filter(|&&t| t == SEPARATOR).count()
    }
}

/// An entity segment `name : description` or a plain relation segment.
struct Segment {
    head: Vec<u32>,
    description: Vec<u32>,
}

/// Renders the begin/separator layouts
///
/// ```text
/// classic   [CLS] h : h_desc [SEP] r [SEP]
/// anchor    [CLS] h : h_desc [SEP] r [SEP] a : a_desc [SEP]
/// candidate [CLS] t : t_desc [SEP]
/// ```
///
/// Query segments are tokenized with their position (head 0, relation 1,
/// anchor 2); the candidate segment is segment 0.
///
/// Over-long sequences lose description tokens first, starting from the last
/// segment and from the end of each description.
pub struct Renderer<'a> {
    descriptions: &'a DescriptionTable,
    tokenizer: &'a dyn Tokenizer,
    max_seq_len: usize,
}

impl<'a> Renderer<'a> {
    pub fn new(descriptions: &'a DescriptionTable, tokenizer: &'a dyn Tokenizer, max_seq_len: usize) -> Self {
        Renderer {
            descriptions,
            tokenizer,
            max_seq_len,
        }
    }

    pub fn descriptions(&self) -> &DescriptionTable {
        self.descriptions
    }

    pub fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }

    fn entity_segment(&self, e: EntityId, segment: u32) -> Segment {
        let text = self.descriptions.entity(e);
        let mut head = self.tokenizer.tokenize_segment(&text.name, segment);
        head.extend(self.tokenizer.tokenize_segment(":", segment));
        Segment {
            head,
            description: self.tokenizer.tokenize_segment(&text.description, segment),
        }
    }

    fn relation_segment(&self, r: RelationId) -> Segment {
        Segment {
            head: self.tokenizer.tokenize_segment(&self.descriptions.relation_text(r), 1),
            description: Vec::new(),
        }
    }

    fn assemble(&self, mut segments: Vec<Segment>) -> TokenSequence {
        let total = |segs: &[Segment]| 1 + segs.iter().map(|s| s.head.len() + s.description.len() + 1).sum::<usize>();
        let mut excess = total(&segments).saturating_sub(self.max_seq_len);
        let truncated = excess > 0;
        for seg in segments.iter_mut().rev() {
            if excess == 0 {
                break;
            }
            let cut = excess.min(seg.description.len());
            seg.description.truncate(seg.description.len() - cut);
            excess -= cut;
        }
        let mut ids = Vec::with_capacity(self.max_seq_len);
        ids.push(BEGIN);
        for seg in &segments {
            ids.extend_from_slice(&seg.head);
            ids.extend_from_slice(&seg.description);
            ids.push(SEPARATOR);
        }
        // names alone exceed the budget: hard cut
        ids.truncate(self.max_seq_len);
        TokenSequence { ids, truncated }
    }

    pub fn classic_query(&self, head: EntityId, relation: RelationId) -> TokenSequence {
        self.assemble(vec![self.entity_segment(head, 0), self.relation_segment(relation)])
    }

    pub fn anchor_query(&self, head: EntityId, relation: RelationId, anchor: EntityId) -> TokenSequence {
        self.assemble(vec![
            self.entity_segment(head, 0),
            self.relation_segment(relation),
            self.entity_segment(anchor, 2),
        ])
    }

    pub fn candidate(&self, entity: EntityId) -> TokenSequence {
        self.assemble(vec![self.entity_segment(entity, 0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchoring::HashingTokenizer;
    use crate::graph::Vocab;
    use std::path::Path;

    fn setup(desc: &str) -> (DescriptionTable, HashingTokenizer) {
        let ents = Vocab::from(vec!["europe".to_string(), "portuguese_republic".into(), "rumania".into()]);
        let rels = Vocab::from(vec!["_has_part".to_string()]);
        let mut table = DescriptionTable::fallback(&ents, &rels);
        table.merge_text(desc, Path::new("d"), &ents).unwrap();
        (table, HashingTokenizer::new(30_000))
    }

    fn expect(tok: &HashingTokenizer, text: &str) -> Vec<u32> {
        // [CLS]/[SEP] placeholders map to the reserved ids; words after the n-th [SEP] are in segment n
        let mut segment = 0;
        text.split(' ')
            .flat_map(|w| match w {
                "[CLS]" => vec![BEGIN],
                "[SEP]" => {
                    segment += 1;
                    vec![SEPARATOR]
                }
                other => tok.tokenize_segment(other, segment),
            })
            .collect()
    }

    #[test]
    fn anchor_query_layout() {
        let (table, tok) = setup(
            "europe\teurope\tthe second smallest continent\nportuguese_republic\tportuguese_republic\ta republic in southwestern europe\n",
        );
        let r = Renderer::new(&table, &tok, 64);
        let seq = r.anchor_query(EntityId(0), RelationId::forward(0), EntityId(1));
        assert_eq!(
            seq.ids,
            expect(
                &tok,
                "[CLS] europe : the second smallest continent [SEP] has part [SEP] portuguese republic : a republic in southwestern europe [SEP]"
            )
        );
        assert!(!seq.truncated);
        assert_eq!(seq.separator_count(), 3);
    }

    #[test]
    fn empty_descriptions() {
        let (table, tok) = setup("");
        let r = Renderer::new(&table, &tok, 64);
        assert_eq!(
            r.anchor_query(EntityId(0), RelationId::forward(0), EntityId(2)).ids,
            expect(&tok, "[CLS] europe : [SEP] has part [SEP] rumania : [SEP]")
        );
        assert_eq!(r.candidate(EntityId(2)).ids, expect(&tok, "[CLS] rumania : [SEP]"));
        let classic = r.classic_query(EntityId(0), RelationId::forward(0));
        assert_eq!(classic.ids, expect(&tok, "[CLS] europe : [SEP] has part [SEP]"));
        assert_eq!(classic.separator_count(), 2);
    }

    #[test]
    fn inverse_relation_text() {
        let (table, tok) = setup("");
        let r = Renderer::new(&table, &tok, 64);
        assert_eq!(
            r.classic_query(EntityId(0), RelationId::forward(0).inverse()).ids,
            expect(&tok, "[CLS] europe : [SEP] inverse has part [SEP]")
        );
    }

    #[test]
    fn long_descriptions_are_cut_from_the_tail() {
        let long = (0..200).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let (table, tok) = setup(&format!("rumania\trumania\t{long}\neurope\teurope\t{long}\n"));
        let r = Renderer::new(&table, &tok, 16);
        let cand = r.candidate(EntityId(2));
        assert!(cand.truncated);
        assert_eq!(cand.len(), 16);
        assert_eq!(cand.ids[..3], expect(&tok, "[CLS] rumania :")[..]);
        assert_eq!(cand.ids[3..15], tok.tokenize(&long)[..12]);
        assert_eq!(*cand.ids.last().unwrap(), SEPARATOR);

        // the anchor's description goes first, the names survive
        let q = r.anchor_query(EntityId(0), RelationId::forward(0), EntityId(2));
        assert_eq!(q.len(), 16);
        assert_eq!(q.separator_count(), 3);
        let tail = expect(&tok, "[SEP] [SEP] rumania : [SEP]");
        assert_eq!(q.ids[16 - (tail.len() - 1)..], tail[1..]);
    }
}
