use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::rank::RankingResult;
use crate::config::RunConfig;
use crate::graph::Vocab;

/// Ranking metrics in percent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mrr: f64,
    pub hit1: f64,
    pub hit3: f64,
    pub hit10: f64,
    pub count: usize,
}

/// Share of ranks at most `k`, in percent.
pub fn hit_at(ranks: &[usize], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

/// Mean reciprocal rank and Hit@{1,3,10} over 1-based ranks.
pub fn compute_metrics(ranks: &[usize]) -> Metrics {
    if ranks.is_empty() {
        return Metrics::default();
    }
    let mrr = 100.0 * ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64;
    Metrics {
        mrr,
        hit1: hit_at(ranks, 1),
        hit3: hit_at(ranks, 3),
        hit10: hit_at(ranks, 10),
        count: ranks.len(),
    }
}

/// Overall metrics, a per-relation breakdown (both query directions grouped under
/// the base relation) and the unweighted mean across relations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: String,
    pub overall: Metrics,
    pub per_relation: BTreeMap<String, Metrics>,
    pub macro_average: Metrics,
    pub config: RunConfig,
}

impl MetricsReport {
    pub fn from_results(results: &[RankingResult], relations: &Vocab, split: &str, config: &RunConfig) -> Self {
        let ranks: Vec<usize> = results.iter().map(|r| r.rank).collect();
        let mut grouped: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for r in results {
            let name = relations
                .name(r.relation.index() as u32)
                .map(str::to_string)
                .unwrap_or_else(|| format!("relation_{}", r.relation.index()));
            grouped.entry(name).or_default().push(r.rank);
        }
        let per_relation: BTreeMap<String, Metrics> =
            grouped.into_iter().map(|(k, v)| (k, compute_metrics(&v))).collect();
        MetricsReport {
            split: split.to_string(),
            overall: compute_metrics(&ranks),
            macro_average: macro_average(per_relation.values()),
            per_relation,
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// CSV with the config as a leading comment line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config: {}", serde_json::to_string(&self.config).expect("config serializes"));
        out.push_str("scope,relation,count,MRR,Hit@1,Hit@3,Hit@10\n");
        let mut row = |scope: &str, relation: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{scope},{relation},{},{:.4},{:.4},{:.4},{:.4}",
                m.count, m.mrr, m.hit1, m.hit3, m.hit10
            );
        };
        row("overall", "", &self.overall);
        row("macro", "", &self.macro_average);
        for (name, m) in &self.per_relation {
            row("relation", name, m);
        }
        out
    }
}

fn macro_average<'a>(items: impl Iterator<Item = &'a Metrics>) -> Metrics {
    let items: Vec<&Metrics> = items.collect();
    if items.is_empty() {
        return Metrics::default();
    }
    let n = items.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| items.iter().map(|m| f(m)).sum::<f64>() / n;
    Metrics {
        mrr: mean(|m| m.mrr),
        hit1: mean(|m| m.hit1),
        hit3: mean(|m| m.hit3),
        hit10: mean(|m| m.hit10),
        count: items.iter().map(|m| m.count).sum(),
    }
}
