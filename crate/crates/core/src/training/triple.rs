use crate::anchoring::{sample_anchors, AblationMode, AnchorSet};
use crate::config::RunConfig;
use crate::encoders::{anchor_prototype, dot, Gradients, TripleModel};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyIndex, EntityId, RelationId, Triple};
use crate::rng::{self, domain};

use super::batch::NegativeSets;
use super::loss::{info_nce, loss_combined, LossBreakdown};
use super::optimizer::OptimizerState;

/// A training triple with the anchors drawn for its query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleItem {
    pub triple: Triple,
    pub anchors: AnchorSet,
}

/// Anchor pool of `(head, relation)` under `mode`.
pub fn anchor_pool(index: &AdjacencyIndex, head: EntityId, relation: RelationId, mode: AblationMode) -> Vec<EntityId> {
    match mode {
        AblationMode::NT => Vec::new(),
        AblationMode::NRT => index.other_relation_tails(head, relation),
        AblationMode::IET | AblationMode::IRT => index.relation_aware_neighbors(head, relation).to_vec(),
    }
}

pub fn assemble_triple_batch(
    index: &AdjacencyIndex,
    triples: &[Triple],
    config: &RunConfig,
    epoch: usize,
    offset: usize,
) -> Result<Vec<TripleItem>> {
    if config.in_batch_negatives && triples.len() < 2 {
        return Err(Error::Config(format!(
            "in-batch negatives need at least 2 items per batch, got {}",
            triples.len()
        )));
    }
    let active = config.anchor_objective_active();
    triples
        .iter()
        .enumerate()
        .map(|(i, &triple)| {
            let anchors = if active {
                let mut g = rng::stream(
                    config.seed,
                    domain::TRAIN_ANCHORS,
                    rng::pair(epoch as u64, (offset + i) as u64),
                );
                let pool = anchor_pool(index, triple.head, triple.relation, config.mode);
                sample_anchors(&pool, config.k, &mut g, Some(triple.tail))?
            } else {
                AnchorSet::empty(config.k, false)
            };
            Ok(TripleItem { triple, anchors })
        })
        .collect()
}

/// Cosine of `u` and `v` with both partial gradients. Zero vectors give a zero score.
pub fn cosine_with_grads(u: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu < 1e-12 || nv < 1e-12 {
        return (0.0, vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    let c = dot(u, v) / (nu * nv);
    let gu = u.iter().zip(v).map(|(a, b)| b / (nu * nv) - c * a / (nu * nu)).collect();
    let gv = u.iter().zip(v).map(|(a, b)| a / (nu * nv) - c * b / (nv * nv)).collect();
    (c, gu, gv)
}

fn add_row(buf: &mut [f64], row: usize, dim: usize, scale: f64, g: &[f64]) {
    for (b, x) in buf[row * dim..(row + 1) * dim].iter_mut().zip(g) {
        *b += scale * x;
    }
}

/// Base contrastive loss over the model score (unit temperature, no margin) plus
/// `α` times the prototype loss over `cos(prototype, e_t)` with the configured margin
/// and temperature. Items without anchors contribute zero to the prototype term.
pub fn triple_loss_and_gradients(
    model: &TripleModel,
    items: &[TripleItem],
    config: &RunConfig,
) -> Result<(LossBreakdown, Gradients)> {
    let b = items.len();
    if b == 0 {
        return Err(Error::Data("empty batch".into()));
    }
    for it in items {
        model.check_entity(it.triple.head)?;
        model.check_entity(it.triple.tail)?;
    }
    let heads: Vec<_> = items.iter().map(|it| it.triple.head).collect();
    let golds: Vec<_> = items.iter().map(|it| it.triple.tail).collect();
    let negatives = NegativeSets::build(&heads, &golds, config.in_batch_negatives)?;
    let dim = model.dim();
    let mut grads = Gradients::zeros_like(model);
    let scale = 1.0 / b as f64;

    let mut base_sum = 0.0;
    for (i, it) in items.iter().enumerate() {
        let Triple { head: h, relation: r, tail: t } = it.triple;
        let mut cands = Vec::with_capacity(negatives.in_batch[i].len() + 1);
        if negatives.self_negative[i] {
            cands.push(h);
        }
        cands.extend(negatives.in_batch[i].iter().map(|&j| golds[j]));
        let negs: Vec<f64> = cands.iter().map(|&c| model.score(h, r, c)).collect();
        let res = info_nce(model.score(h, r, t), &negs, 0.0, 1.0)?;
        base_sum += res.loss;
        let rr = model.relation_row_index(r);
        for (&c, &gs) in std::iter::once(&t).chain(&cands).zip(std::iter::once(&res.grad_pos).chain(&res.grad_negs)) {
            let (gh, gr, gt) = model.score_grad(h, r, c);
            let (ent, rel) = grads.0.split_at_mut(1);
            add_row(&mut ent[0], h.index(), dim, scale * gs, &gh);
            add_row(&mut ent[0], c.index(), dim, scale * gs, &gt);
            add_row(&mut rel[0], rr, dim, scale * gs, &gr);
        }
    }

    let mut anchor_sum = 0.0;
    if config.anchor_objective_active() {
        let w = config.alpha * scale;
        for (i, it) in items.iter().enumerate() {
            let Some(proto) = anchor_prototype(model, &it.anchors) else {
                continue;
            };
            let k = it.anchors.anchors.len() as f64;
            let mut cands = vec![it.triple.tail];
            cands.extend(negatives.in_batch[i].iter().map(|&j| golds[j]));
            let sims: Vec<_> = cands
                .iter()
                .map(|&c| cosine_with_grads(&proto, model.entity_row(c)))
                .collect();
            let negs: Vec<f64> = sims[1..].iter().map(|s| s.0).collect();
            let res = info_nce(sims[0].0, &negs, config.margin, config.tau)?;
            anchor_sum += res.loss;
            let mut g_proto = vec![0.0; dim];
            for ((c, (_, gp, gt)), gs) in cands.iter().zip(&sims).zip(std::iter::once(&res.grad_pos).chain(&res.grad_negs)) {
                add_row(&mut grads.0[0], c.index(), dim, w * gs, gt);
                for (a, x) in g_proto.iter_mut().zip(gp) {
                    *a += gs * x;
                }
            }
            for &a in &it.anchors.anchors {
                add_row(&mut grads.0[0], a.index(), dim, w / k, &g_proto);
            }
        }
    }
    let alpha = if config.anchor_objective_active() { config.alpha } else { 0.0 };
    Ok((
        loss_combined(anchor_sum * scale, base_sum * scale, alpha, config.tau, config.margin),
        grads,
    ))
}

pub fn triple_train_step(
    model: &mut TripleModel,
    optimizer: &mut OptimizerState,
    items: &[TripleItem],
    config: &RunConfig,
) -> Result<LossBreakdown> {
    let (loss, grads) = triple_loss_and_gradients(model, items, config)?;
    if !loss.combined.is_finite() {
        return Err(Error::Numerical(format!("loss became {}", loss.combined)));
    }
    optimizer.update(model, &grads)?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{Parameters, TripleModelKind};
    use crate::graph::{parse_triples, Split};
    use std::path::Path;

    #[test]
    fn cosine_gradients_match_finite_differences() {
        let u = vec![0.3, -0.2, 0.9];
        let v = vec![-0.5, 0.4, 0.1];
        let (_, gu, gv) = cosine_with_grads(&u, &v);
        let h = 1e-6;
        for i in 0..3 {
            let mut a = u.clone();
            a[i] += h;
            let mut b = u.clone();
            b[i] -= h;
            let fd = (cosine_with_grads(&a, &v).0 - cosine_with_grads(&b, &v).0) / (2.0 * h);
            assert!((fd - gu[i]).abs() < 1e-8);
            let mut a = v.clone();
            a[i] += h;
            let mut b = v.clone();
            b[i] -= h;
            let fd = (cosine_with_grads(&u, &a).0 - cosine_with_grads(&u, &b).0) / (2.0 * h);
            assert!((fd - gv[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn objective_gradients_match_finite_differences() {
        let store = parse_triples(
            "a\tr\tb\na\tr\tc\nb\tr\tc\nc\ts\ta\nd\ts\tb\n",
            Path::new("t"),
            Split::Train,
            None,
        )
        .unwrap();
        let index = AdjacencyIndex::build(&store);
        for kind in [TripleModelKind::TransE, TripleModelKind::ComplEx] {
            let mut g = rng::stream(1, 0, 0);
            let model = TripleModel::init(kind, store.entities().len(), store.relations().len(), 6, &mut g).unwrap();
            let config = RunConfig {
                alpha: 0.5,
                tau: 0.2,
                k: 2,
                ..RunConfig::default()
            };
            let items = assemble_triple_batch(&index, store.triples(), &config, 0, 0).unwrap();
            assert!(items.iter().any(|it| !it.anchors.anchors.is_empty()));
            let (_, grads) = triple_loss_and_gradients(&model, &items, &config).unwrap();
            let h = 1e-6;
            for t in 0..2 {
                for i in 0..model.tensors()[t].data.len() {
                    let mut up = model.clone();
                    up.tensors_mut()[t][i] += h;
                    let mut dn = model.clone();
                    dn.tensors_mut()[t][i] -= h;
                    let fu = triple_loss_and_gradients(&up, &items, &config).unwrap().0.combined;
                    let fdn = triple_loss_and_gradients(&dn, &items, &config).unwrap().0.combined;
                    let fd = (fu - fdn) / (2.0 * h);
                    assert!((fd - grads.0[t][i]).abs() < 1e-6, "{kind} t{t} i{i}: {fd} vs {}", grads.0[t][i]);
                }
            }
        }
    }
}
