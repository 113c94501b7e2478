//! Anchor sampling and token-level query/candidate rendering.

mod bundle;
mod render;
mod sampler;
mod tokenizer;

pub use bundle::{build_query_bundle, AblationMode, QueryBundle};
pub use render::{Renderer, TokenSequence};
pub use sampler::{sample_anchors, AnchorSet, MAX_ANCHORS};
pub use tokenizer::{HashingTokenizer, Tokenizer, BEGIN, PAD, RESERVED, SEPARATOR, UNKNOWN};
