//! Run configuration shared by every command.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::anchoring::{AblationMode, MAX_ANCHORS, RESERVED};
use crate::encoders::TripleModelKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[default]
    #[serde(rename = "bi-encoder")]
    BiEncoder,
    #[serde(rename = "transe")]
    TransE,
    #[serde(rename = "complex")]
    ComplEx,
}

impl ModelKind {
    pub fn triple_kind(self) -> Option<TripleModelKind> {
        match self {
            ModelKind::BiEncoder => None,
            ModelKind::TransE => Some(TripleModelKind::TransE),
            ModelKind::ComplEx => Some(TripleModelKind::ComplEx),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::BiEncoder => "bi-encoder",
            ModelKind::TransE => "transe",
            ModelKind::ComplEx => "complex",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bi-encoder" | "biencoder" | "bi_encoder" => Ok(ModelKind::BiEncoder),
            "transe" => Ok(ModelKind::TransE),
            "complex" => Ok(ModelKind::ComplEx),
            other => Err(Error::Config(format!(
                "unknown model {other:?} (bi-encoder, transe, complex)"
            ))),
        }
    }
}

/// Every knob of a run. Missing JSON fields take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Prepared store directory or raw TSV directory.
    pub dataset: PathBuf,
    pub model: ModelKind,
    pub mode: AblationMode,
    /// Anchor sample size, at most 5.
    pub k: usize,
    /// Weight of the anchor-enhanced loss term.
    pub alpha: f64,
    /// Additive margin on the positive logit.
    pub margin: f64,
    /// Initial temperature.
    pub tau: f64,
    pub dim: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Epochs without validation MRR improvement before stopping; 0 disables validation.
    pub patience: usize,
    pub in_batch_negatives: bool,
    /// Candidates kept per ranked query for inspection.
    pub top_m: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::from("data"),
            model: ModelKind::BiEncoder,
            mode: AblationMode::IRT,
            k: 4,
            alpha: 0.3,
            margin: 0.02,
            tau: 0.05,
            dim: 256,
            vocab_size: 30_000,
            max_seq_len: 64,
            batch_size: 32,
            epochs: 20,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            seed: 42,
            output_dir: PathBuf::from("runs/default"),
            patience: 3,
            in_batch_negatives: true,
            top_m: 5,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.k > MAX_ANCHORS {
            return fail(format!("k = {} exceeds the anchor cap {MAX_ANCHORS}", self.k));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be a finite non-negative number, got {}", self.alpha));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if !self.margin.is_finite() {
            return fail("margin must be finite".into());
        }
        if self.in_batch_negatives && self.batch_size < 2 {
            return fail(format!(
                "batch size {} is too small for in-batch negatives",
                self.batch_size
            ));
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive".into());
        }
        if self.dim == 0 {
            return fail("dim must be positive".into());
        }
        if self.model == ModelKind::ComplEx && !self.dim.is_multiple_of(2) {
            return fail(format!("ComplEx needs an even dim, got {}", self.dim));
        }
        if self.vocab_size <= RESERVED as usize {
            return fail(format!("vocab_size must exceed {RESERVED}"));
        }
        if self.max_seq_len < 8 {
            return fail("max_seq_len must be at least 8".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive".into());
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return fail("weight_decay must be non-negative".into());
        }
        Ok(())
    }

    /// True when the anchor-enhanced objective contributes to training.
    pub fn anchor_objective_active(&self) -> bool {
        self.mode.uses_anchors() && self.alpha > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_defaults_fill_missing_fields() {
        let cfg: RunConfig = serde_json::from_str(r#"{"k": 2, "model": "transe", "mode": "NT"}"#).unwrap();
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.model, ModelKind::TransE);
        assert_eq!(cfg.mode, AblationMode::NT);
        assert_eq!(cfg.batch_size, 32);
        assert_eq!(cfg.margin, 0.02);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_rules() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().unwrap_err()
        };
        assert!(matches!(bad(|c| c.k = 6), Error::Config(_)));
        assert!(matches!(bad(|c| c.alpha = -0.1), Error::Config(_)));
        assert!(matches!(bad(|c| c.batch_size = 1), Error::Config(_)));
        assert!(matches!(bad(|c| c.tau = 0.0), Error::Config(_)));
        assert!(matches!(
            bad(|c| {
                c.model = ModelKind::ComplEx;
                c.dim = 7
            }),
            Error::Config(_)
        ));
        let single = RunConfig { batch_size: 1, in_batch_negatives: false, ..RunConfig::default() };
        assert!(single.validate().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"kk": 2}"#).is_err());
    }
}
