use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{round_to_storage, Parameters, TensorRef};
use crate::anchoring::AnchorSet;
use crate::error::{Error, Result};
use crate::graph::{EntityId, RelationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleModelKind {
    TransE,
    ComplEx,
}

impl fmt::Display for TripleModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TripleModelKind::TransE => "transe",
            TripleModelKind::ComplEx => "complex",
        })
    }
}

impl FromStr for TripleModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(TripleModelKind::TransE),
            "complex" => Ok(TripleModelKind::ComplEx),
            other => Err(Error::Config(format!("unknown triple model {other:?}"))),
        }
    }
}

/// `−‖h + r − t‖₂`.
pub fn transe_score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    -h.iter()
        .zip(r)
        .zip(t)
        .map(|((a, b), c)| {
            let x = a + b - c;
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

fn transe_grad(h: &[f64], r: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = h.iter().zip(r).zip(t).map(|((a, b), c)| a + b - c).collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        let z = vec![0.0; x.len()];
        return (z.clone(), z.clone(), z);
    }
    let gh: Vec<f64> = x.iter().map(|v| -v / norm).collect();
    let gt: Vec<f64> = gh.iter().map(|v| -v).collect();
    (gh.clone(), gh, gt)
}

/// `Re(Σ h ⊙ r ⊙ conj(t))` with the first half of each vector holding real parts.
pub fn complex_score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let n = h.len() / 2;
    (0..n)
        .map(|k| {
            let (hr, hi) = (h[k], h[k + n]);
            let (rr, ri) = (r[k], r[k + n]);
            let (tr, ti) = (t[k], t[k + n]);
            hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr
        })
        .sum()
}

fn complex_grad(h: &[f64], r: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = h.len() / 2;
    let (mut gh, mut gr, mut gt) = (vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]);
    for k in 0..n {
        let (hr, hi) = (h[k], h[k + n]);
        let (rr, ri) = (r[k], r[k + n]);
        let (tr, ti) = (t[k], t[k + n]);
        gh[k] = rr * tr + ri * ti;
        gh[k + n] = rr * ti - ri * tr;
        gr[k] = hr * tr + hi * ti;
        gr[k + n] = hr * ti - hi * tr;
        gt[k] = hr * rr - hi * ri;
        gt[k + n] = hi * rr + hr * ri;
    }
    (gh, gr, gt)
}

/// Entity and relation tables for TransE or ComplEx. Relation rows hold the
/// forward relations first, then their inverses.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleModel {
    kind: TripleModelKind,
    dim: usize,
    entity_count: usize,
    base_relations: usize,
    pub(crate) entity: Vec<f64>,
    pub(crate) relation: Vec<f64>,
}

impl TripleModel {
    /// Tables uniform in ±0.1.
    pub fn init<R: Rng + ?Sized>(
        kind: TripleModelKind,
        entity_count: usize,
        base_relations: usize,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if kind == TripleModelKind::ComplEx && !dim.is_multiple_of(2) {
            return Err(Error::Config(format!("ComplEx needs an even dimension, got {dim}")));
        }
        let mut draw = |n: usize| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..=0.1)).collect();
            round_to_storage(&mut v);
            v
        };
        let entity = draw(entity_count * dim);
        let relation = draw(2 * base_relations * dim);
        Ok(TripleModel {
            kind,
            dim,
            entity_count,
            base_relations,
            entity,
            relation,
        })
    }

    pub(crate) fn from_parts(
        kind: TripleModelKind,
        dim: usize,
        entity_count: usize,
        base_relations: usize,
        entity: Vec<f64>,
        relation: Vec<f64>,
    ) -> Result<Self> {
        if entity.len() != entity_count * dim || relation.len() != 2 * base_relations * dim {
            return Err(Error::Data("triple model tensor shapes do not match dims".into()));
        }
        Ok(TripleModel {
            kind,
            dim,
            entity_count,
            base_relations,
            entity,
            relation,
        })
    }

    pub fn kind(&self) -> TripleModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn base_relations(&self) -> usize {
        self.base_relations
    }

    pub fn entity_row(&self, e: EntityId) -> &[f64] {
        &self.entity[e.index() * self.dim..(e.index() + 1) * self.dim]
    }

    pub fn relation_row(&self, r: RelationId) -> &[f64] {
        let i = r.dense(self.base_relations);
        &self.relation[i * self.dim..(i + 1) * self.dim]
    }

    pub fn relation_row_index(&self, r: RelationId) -> usize {
        r.dense(self.base_relations)
    }

    pub fn score(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        self.score_rows(self.entity_row(h), self.relation_row(r), self.entity_row(t))
    }

    pub fn score_rows(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        match self.kind {
            TripleModelKind::TransE => transe_score(h, r, t),
            TripleModelKind::ComplEx => complex_score(h, r, t),
        }
    }

    /// `(∂s/∂h, ∂s/∂r, ∂s/∂t)` for one triple.
    pub fn score_grad(&self, h: EntityId, r: RelationId, t: EntityId) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (hv, rv, tv) = (self.entity_row(h), self.relation_row(r), self.entity_row(t));
        match self.kind {
            TripleModelKind::TransE => transe_grad(hv, rv, tv),
            TripleModelKind::ComplEx => complex_grad(hv, rv, tv),
        }
    }

    pub fn check_entity(&self, e: EntityId) -> Result<()> {
        if e.index() >= self.entity_count {
            return Err(Error::Data(format!(
                "entity {} has no row in a {}-entity triple model",
                e.0, self.entity_count
            )));
        }
        Ok(())
    }
}

/// Coordinatewise mean of the anchors' entity rows; `None` on fallback.
pub fn anchor_prototype(model: &TripleModel, anchors: &AnchorSet) -> Option<Vec<f64>> {
    if anchors.anchors.is_empty() {
        return None;
    }
    let mut mean = vec![0.0; model.dim];
    for &a in &anchors.anchors {
        for (m, v) in mean.iter_mut().zip(model.entity_row(a)) {
            *m += v;
        }
    }
    let k = anchors.anchors.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    Some(mean)
}

impl Parameters for TripleModel {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        vec![
            TensorRef {
                name: "entity".into(),
                shape: vec![self.entity_count, self.dim],
                data: &self.entity,
            },
            TensorRef {
                name: "relation".into(),
                shape: vec![2 * self.base_relations, self.dim],
                data: &self.relation,
            },
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.entity, &mut self.relation]
    }
}
