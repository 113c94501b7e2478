use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::{Parameters, TensorRef};
use super::text::{BiEncoder, TextEncoder};
use super::triple::{TripleModel, TripleModelKind};
use crate::config::{ModelKind, RunConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";
const PARAMS_FILE: &str = "params.bin";

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    BiEncoder(BiEncoder),
    Triple(TripleModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::BiEncoder(_) => ModelKind::BiEncoder,
            Model::Triple(m) => match m.kind() {
                TripleModelKind::TransE => ModelKind::TransE,
                TripleModelKind::ComplEx => ModelKind::ComplEx,
            },
        }
    }
}

impl Parameters for Model {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        match self {
            Model::BiEncoder(m) => m.tensors(),
            Model::Triple(m) => m.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Model::BiEncoder(m) => m.tensors_mut(),
            Model::Triple(m) => m.tensors_mut(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset in f32 elements into `params.bin`.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub dim: usize,
    pub vocab_size: usize,
    pub entity_count: usize,
    pub base_relations: usize,
    pub epoch: usize,
    pub step: u64,
    pub tensors: Vec<TensorEntry>,
    pub config: RunConfig,
}

/// A model plus the manifest describing it. On disk: `manifest.json` and
/// `params.bin` (little-endian f32, tensors concatenated row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub model: Model,
}

impl Checkpoint {
    pub fn new(model: Model, config: &RunConfig, entity_count: usize, base_relations: usize, epoch: usize, step: u64) -> Self {
        let mut offset = 0;
        let tensors = model
            .tensors()
            .into_iter()
            .map(|t| {
                let entry = TensorEntry {
                    name: t.name,
                    shape: t.shape,
                    offset,
                };
                offset += t.data.len();
                entry
            })
            .collect();
        let (dim, vocab_size) = match &model {
            Model::BiEncoder(m) => (m.dim(), m.query.vocab_size()),
            Model::Triple(m) => (m.dim(), 0),
        };
        Checkpoint {
            manifest: CheckpointManifest {
                format_version: CHECKPOINT_VERSION,
                model_kind: model.kind(),
                dim,
                vocab_size,
                entity_count,
                base_relations,
                epoch,
                step,
                tensors,
                config: config.clone(),
            },
            model,
        }
    }

    fn encode(&self) -> Result<(Vec<u8>, Vec<u8>)> {
        let manifest = serde_json::to_vec_pretty(&self.manifest)?;
        let mut params = Vec::with_capacity(self.model.parameter_count() * 4);
        for t in self.model.tensors() {
            for &v in t.data {
                params.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Ok((manifest, params))
    }

    /// SHA-256 over the manifest bytes followed by the parameter bytes.
    pub fn digest(&self) -> Result<String> {
        let (manifest, params) = self.encode()?;
        Ok(digest_of(&manifest, &params))
    }

    /// Writes the checkpoint and returns its digest.
    pub fn save(&self, dir: &Path) -> Result<String> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (manifest, params) = self.encode()?;
        let mpath = dir.join(MANIFEST_FILE);
        fs::write(&mpath, &manifest).map_err(|e| Error::io(&mpath, e))?;
        let ppath = dir.join(PARAMS_FILE);
        fs::write(&ppath, &params).map_err(|e| Error::io(&ppath, e))?;
        Ok(digest_of(&manifest, &params))
    }

    /// Loads a checkpoint and returns it with the digest of the bytes read.
    pub fn load(dir: &Path) -> Result<(Self, String)> {
        let mpath = dir.join(MANIFEST_FILE);
        let manifest_bytes = fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let manifest: CheckpointManifest = serde_json::from_slice(&manifest_bytes)?;
        if manifest.format_version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported checkpoint version {}",
                mpath.display(),
                manifest.format_version
            )));
        }
        let ppath = dir.join(PARAMS_FILE);
        let params = fs::read(&ppath).map_err(|e| Error::io(&ppath, e))?;
        if params.len() % 4 != 0 {
            return Err(Error::Data(format!("{}: truncated parameter file", ppath.display())));
        }
        let floats: Vec<f64> = params
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        let tensor = |name: &str| -> Result<Vec<f64>> {
            let entry = manifest
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::Data(format!("checkpoint lacks tensor {name}")))?;
            let len: usize = entry.shape.iter().product();
            floats
                .get(entry.offset..entry.offset + len)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::Data(format!("tensor {name} runs past the parameter file")))
        };
        let (d, v) = (manifest.dim, manifest.vocab_size);
        let model = match manifest.model_kind {
            ModelKind::BiEncoder => {
                let encoder = |prefix: &str| -> Result<TextEncoder> {
                    TextEncoder::from_parts(
                        v,
                        d,
                        [
                            tensor(&format!("{prefix}.token_embedding"))?,
                            tensor(&format!("{prefix}.w1"))?,
                            tensor(&format!("{prefix}.b1"))?,
                            tensor(&format!("{prefix}.w2"))?,
                            tensor(&format!("{prefix}.b2"))?,
                        ],
                    )
                };
                Model::BiEncoder(BiEncoder {
                    query: encoder("query")?,
                    candidate: encoder("candidate")?,
                    log_tau: tensor("log_tau")?[0],
                })
            }
            kind => {
                let triple_kind = kind.triple_kind().expect("triple model kind");
                Model::Triple(TripleModel::from_parts(
                    triple_kind,
                    d,
                    manifest.entity_count,
                    manifest.base_relations,
                    tensor("entity")?,
                    tensor("relation")?,
                )?)
            }
        };
        let digest = digest_of(&manifest_bytes, &params);
        Ok((Checkpoint { manifest, model }, digest))
    }
}

fn digest_of(manifest: &[u8], params: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(manifest);
    hasher.update(params);
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn bi_encoder_round_trip_is_exact() {
        let model = BiEncoder::init(12, 4, 0.05, &mut rng::stream(1, 1, 0), &mut rng::stream(1, 2, 0));
        let ck = Checkpoint::new(Model::BiEncoder(model), &RunConfig::default(), 5, 2, 3, 17);
        let dir = tempfile::tempdir().unwrap();
        let digest = ck.save(dir.path()).unwrap();
        let (back, digest2) = Checkpoint::load(dir.path()).unwrap();
        assert_eq!(digest, digest2);
        assert_eq!(back, ck);
        assert_eq!(digest, ck.digest().unwrap());
    }

    #[test]
    fn triple_round_trip_and_digest_sensitivity() {
        let model = TripleModel::init(TripleModelKind::ComplEx, 6, 2, 4, &mut rng::stream(2, 3, 0)).unwrap();
        let mut ck = Checkpoint::new(Model::Triple(model), &RunConfig::default(), 6, 2, 0, 0);
        let dir = tempfile::tempdir().unwrap();
        let digest = ck.save(dir.path()).unwrap();
        let (back, _) = Checkpoint::load(dir.path()).unwrap();
        assert_eq!(back, ck);
        ck.manifest.config.seed += 1;
        assert_ne!(ck.digest().unwrap(), digest);
    }
}
