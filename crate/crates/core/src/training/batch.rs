use crate::encoders::dot;
use crate::error::{Error, Result};
use crate::graph::EntityId;

use super::loss::{info_nce, loss_combined, LossBreakdown};

/// Per-item negative index sets for one batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeSets {
    /// In-batch negatives: other items' tails, excluding duplicates of the gold tail.
    pub in_batch: Vec<Vec<usize>>,
    /// Whether the item's own head is a self-negative (skipped when head equals gold).
    pub self_negative: Vec<bool>,
    /// In-batch relation negatives: other items' anchor-enhanced queries paired with this tail.
    pub in_batch_relation: Vec<Vec<usize>>,
}

impl NegativeSets {
    pub fn build(heads: &[EntityId], golds: &[EntityId], in_batch: bool) -> Result<Self> {
        let b = heads.len();
        if golds.len() != b {
            return Err(Error::Data("head and gold lists differ in length".into()));
        }
        if in_batch && b < 2 {
            return Err(Error::Config(format!(
                "in-batch negatives need at least 2 items per batch, got {b}"
            )));
        }
        let others = |i: usize| -> Vec<usize> {
            if !in_batch {
                return Vec::new();
            }
            (0..b).filter(|&j| j != i && golds[j] != golds[i]).collect()
        };
        let in_batch_sets: Vec<Vec<usize>> = (0..b).map(others).collect();
        Ok(NegativeSets {
            in_batch_relation: in_batch_sets.clone(),
            in_batch: in_batch_sets,
            self_negative: (0..b).map(|i| heads[i] != golds[i]).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.self_negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.self_negative.is_empty()
    }
}

/// Unit embeddings of one batch. Row `i` of each field belongs to item `i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchEmbeddings {
    /// Classic query embeddings `e_hr`.
    pub queries: Vec<Vec<f64>>,
    /// Anchor-enhanced query embeddings `e_avg`; ignored when the anchor term is off.
    pub enhanced: Vec<Vec<f64>>,
    /// Gold tail candidate embeddings `e_t`.
    pub tails: Vec<Vec<f64>>,
    /// Head candidate embeddings, used as self-negatives.
    pub heads: Vec<Vec<f64>>,
}

/// `∂L_cls` with respect to every row of [`BatchEmbeddings`] and to `ln τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradients {
    pub queries: Vec<Vec<f64>>,
    pub enhanced: Vec<Vec<f64>>,
    pub tails: Vec<Vec<f64>>,
    pub heads: Vec<Vec<f64>>,
    pub log_tau: f64,
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Batch-mean combined loss over precomputed embeddings, with gradients.
/// The anchor term is evaluated only when `anchor_active`; otherwise it is reported as 0.
pub fn batch_objective(
    emb: &BatchEmbeddings,
    negatives: &NegativeSets,
    margin: f64,
    tau: f64,
    alpha: f64,
    anchor_active: bool,
) -> Result<(LossBreakdown, BatchGradients)> {
    let b = emb.queries.len();
    if b == 0 || emb.tails.len() != b || emb.heads.len() != b || negatives.len() != b {
        return Err(Error::Data("batch embedding rows are inconsistent".into()));
    }
    if anchor_active && emb.enhanced.len() != b {
        return Err(Error::Data("missing anchor-enhanced embeddings".into()));
    }
    let d = emb.queries[0].len();
    let zeros = || vec![vec![0.0; d]; b];
    let mut g = BatchGradients {
        queries: zeros(),
        enhanced: if anchor_active { zeros() } else { Vec::new() },
        tails: zeros(),
        heads: zeros(),
        log_tau: 0.0,
    };
    let scale = 1.0 / b as f64;

    let mut classic_sum = 0.0;
    for i in 0..b {
        let q = &emb.queries[i];
        let pos = dot(q, &emb.tails[i]);
        let mut negs = Vec::with_capacity(negatives.in_batch[i].len() + 1);
        if negatives.self_negative[i] {
            negs.push(dot(q, &emb.heads[i]));
        }
        negs.extend(negatives.in_batch[i].iter().map(|&j| dot(q, &emb.tails[j])));
        let r = info_nce(pos, &negs, margin, tau)?;
        classic_sum += r.loss;
        g.log_tau += scale * r.grad_log_tau;
        axpy(&mut g.queries[i], scale * r.grad_pos, &emb.tails[i]);
        axpy(&mut g.tails[i], scale * r.grad_pos, q);
        let mut n = 0;
        if negatives.self_negative[i] {
            axpy(&mut g.queries[i], scale * r.grad_negs[0], &emb.heads[i]);
            axpy(&mut g.heads[i], scale * r.grad_negs[0], q);
            n = 1;
        }
        for (&j, &gn) in negatives.in_batch[i].iter().zip(&r.grad_negs[n..]) {
            axpy(&mut g.queries[i], scale * gn, &emb.tails[j]);
            axpy(&mut g.tails[j], scale * gn, q);
        }
    }

    let mut anchor_sum = 0.0;
    if anchor_active {
        let w = alpha * scale;
        for i in 0..b {
            let a = &emb.enhanced[i];
            let t = &emb.tails[i];
            let pos = dot(a, t);
            let ibn = &negatives.in_batch[i];
            let ibrn = &negatives.in_batch_relation[i];
            let mut negs = Vec::with_capacity(ibn.len() + ibrn.len());
            negs.extend(ibn.iter().map(|&j| dot(a, &emb.tails[j])));
            negs.extend(ibrn.iter().map(|&j| dot(&emb.enhanced[j], t)));
            let r = info_nce(pos, &negs, margin, tau)?;
            anchor_sum += r.loss;
            g.log_tau += w * r.grad_log_tau;
            axpy(&mut g.enhanced[i], w * r.grad_pos, t);
            axpy(&mut g.tails[i], w * r.grad_pos, a);
            let (g_ibn, g_ibrn) = r.grad_negs.split_at(ibn.len());
            for (&j, &gn) in ibn.iter().zip(g_ibn) {
                axpy(&mut g.enhanced[i], w * gn, &emb.tails[j]);
                axpy(&mut g.tails[j], w * gn, a);
            }
            for (&j, &gn) in ibrn.iter().zip(g_ibrn) {
                axpy(&mut g.tails[i], w * gn, &emb.enhanced[j]);
                axpy(&mut g.enhanced[j], w * gn, t);
            }
        }
    }

    let breakdown = loss_combined(anchor_sum * scale, classic_sum * scale, alpha, tau, margin);
    Ok((breakdown, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<EntityId> {
        v.iter().map(|&i| EntityId(i)).collect()
    }

    #[test]
    fn negative_sets_mask_duplicates() {
        let n = NegativeSets::build(&ids(&[0, 1, 2]), &ids(&[5, 5, 2]), true).unwrap();
        assert_eq!(n.in_batch, vec![vec![2], vec![2], vec![0, 1]]);
        assert_eq!(n.in_batch_relation, n.in_batch);
        assert_eq!(n.self_negative, vec![true, true, false]);
    }

    #[test]
    fn tiny_batch_with_in_batch_negatives_is_config_error() {
        let err = NegativeSets::build(&ids(&[0]), &ids(&[1]), true).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(NegativeSets::build(&ids(&[0]), &ids(&[1]), false).is_ok());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let rows = |seed: f64| -> Vec<Vec<f64>> {
            (0..3)
                .map(|i| (0..4).map(|j| ((i * 4 + j) as f64 * seed).sin()).collect())
                .collect()
        };
        let emb = BatchEmbeddings {
            queries: rows(0.7),
            enhanced: rows(1.3),
            tails: rows(2.1),
            heads: rows(0.4),
        };
        let negs = NegativeSets::build(&ids(&[0, 1, 2]), &ids(&[3, 4, 5]), true).unwrap();
        let f = |e: &BatchEmbeddings| batch_objective(e, &negs, 0.02, 0.5, 0.3, true).unwrap().0.combined;
        let (_, g) = batch_objective(&emb, &negs, 0.02, 0.5, 0.3, true).unwrap();
        let h = 1e-6;
        type Field = fn(&mut BatchEmbeddings) -> &mut Vec<Vec<f64>>;
        let fields: [(Field, &Vec<Vec<f64>>); 4] = [
            (|e| &mut e.queries, &g.queries),
            (|e| &mut e.enhanced, &g.enhanced),
            (|e| &mut e.tails, &g.tails),
            (|e| &mut e.heads, &g.heads),
        ];
        for (field, grad) in fields {
            for (i, row) in grad.iter().enumerate() {
                for (k, &gk) in row.iter().enumerate() {
                    let mut up = emb.clone();
                    field(&mut up)[i][k] += h;
                    let mut dn = emb.clone();
                    field(&mut dn)[i][k] -= h;
                    let fd = (f(&up) - f(&dn)) / (2.0 * h);
                    assert!((fd - gk).abs() < 1e-6, "{fd} vs {gk}");
                }
            }
        }
    }
}
