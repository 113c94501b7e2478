//! Relation-aware anchor enhancement for knowledge graph completion.
//!
//! A query `(h, r, ?)` is answered by two embeddings produced by the query
//! encoder: the classic embedding of the head and relation text, and the
//! anchor-enhanced embedding, the renormalized mean over query sequences that
//! each append one sampled tail already linked to `h` by `r`. Candidates are
//! ranked by the sum of both cosine similarities against the candidate encoder
//! output. The same anchor prototypes can be bolted onto TransE and ComplEx.
//!
//! Module map:
//!
//! * [`graph`] loads, augments, indexes and persists triples and entity text.
//! * [`anchoring`] samples anchors and renders token sequences.
//! * [`encoders`] holds the text bi-encoder, the triple scorers and checkpoints.
//! * [`training`] implements the contrastive objectives and the optimizer.
//! * [`evaluation`] ranks candidates under the filtered protocol.
//! * [`pipeline`] wires everything into the prepare/train/evaluate/predict/sweep flows.

pub mod anchoring;
pub mod config;
pub mod encoders;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod parallel;
pub mod pipeline;
pub mod rng;
pub mod synthetic;
pub mod training;

pub use config::{ModelKind, RunConfig};
pub use error::{Error, Result};
