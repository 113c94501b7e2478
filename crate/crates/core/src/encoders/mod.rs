//! Embedding producers: the text bi-encoder, the triple scorers and checkpoints.

mod checkpoint;
mod embedding;
mod params;
mod text;
mod triple;

pub use checkpoint::{Checkpoint, CheckpointManifest, Model, TensorEntry, CHECKPOINT_VERSION};
pub use embedding::{anchor_enhanced_embedding, cosine, dot, normalize_backward, AnchorEnhancedEmbedding, Embedding};
pub use params::{round_to_storage, Gradients, Parameters, TensorRef};
pub use text::{BiEncoder, EncoderTrace, TextEncoder, TextEncoderGrads};
pub use triple::{anchor_prototype, complex_score, transe_score, TripleModel, TripleModelKind};
