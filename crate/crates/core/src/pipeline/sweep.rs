use std::fmt::Write as _;
use std::fs;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::evaluate::evaluate_model;
use super::train::train_on;
use crate::config::RunConfig;
use crate::encoders::Checkpoint;
use crate::error::{Error, Result};
use crate::evaluation::Metrics;
use crate::graph::{Dataset, Split};
use crate::parallel::Exec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    K,
    Alpha,
}

impl SweepAxis {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::K => (0..=5).map(f64::from).collect(),
            SweepAxis::Alpha => vec![0.0, 0.1, 0.3, 0.5, 1.0],
        }
    }

    fn apply(self, config: &mut RunConfig, value: f64) -> Result<()> {
        match self {
            SweepAxis::K => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("k must be a non-negative integer, got {value}")));
                }
                config.k = value as usize;
            }
            SweepAxis::Alpha => config.alpha = value,
        }
        Ok(())
    }

    fn name(self) -> &'static str {
        match self {
            SweepAxis::K => "k",
            SweepAxis::Alpha => "alpha",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k" => Ok(SweepAxis::K),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(Error::Config(format!("unknown sweep axis {other:?} (k, alpha)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub metrics: Metrics,
}

/// Trains and evaluates one run per axis value, then writes `sweep.csv` into the base output directory.
pub fn sweep(base: &RunConfig, axis: SweepAxis, values: Option<Vec<f64>>, split: Split, exec: Exec) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let values = values.unwrap_or_else(|| axis.default_values());
    let dataset = Dataset::load(&base.dataset)?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in &values {
        let mut config = base.clone();
        axis.apply(&mut config, value)?;
        config.output_dir = base.output_dir.join(format!("{}-{value}", axis.name()));
        let outcome = train_on(&config, &dataset, exec)?;
        let (ckpt, _) = Checkpoint::load(&outcome.checkpoint_dir)?;
        let (report, _) = evaluate_model(&ckpt.model, &config, &dataset, split, None, exec)?;
        log::info!("{}={value}: MRR {:.2}", axis.name(), report.overall.mrr);
        rows.push(SweepRow {
            axis,
            value,
            metrics: report.overall,
        });
    }
    let mut csv = String::new();
    let _ = writeln!(csv, "# config: {}", serde_json::to_string(base)?);
    let _ = writeln!(csv, "{},split,count,MRR,Hit@1,Hit@3,Hit@10", axis.name());
    for r in &rows {
        let m = &r.metrics;
        let _ = writeln!(
            csv,
            "{},{},{},{:.4},{:.4},{:.4},{:.4}",
            r.value,
            split.as_str(),
            m.count,
            m.mrr,
            m.hit1,
            m.hit3,
            m.hit10
        );
    }
    fs::create_dir_all(&base.output_dir).map_err(|e| Error::io(&base.output_dir, e))?;
    let path = base.output_dir.join("sweep.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
