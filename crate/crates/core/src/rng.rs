//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from the
//! run seed, a domain constant and a 64-bit stream id. Streams never share
//! state, so skipping one consumer (for example the anchor sampler in NT mode)
//! leaves every other draw unchanged.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Domain constants for [`stream`].
pub mod domain {
    pub const QUERY_ENCODER_INIT: u64 = 1;
    pub const CANDIDATE_ENCODER_INIT: u64 = 2;
    pub const TRIPLE_MODEL_INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const TRAIN_ANCHORS: u64 = 5;
    pub const INFERENCE_ANCHORS: u64 = 6;
    pub const SYNTHETIC: u64 = 7;
}

pub fn stream(seed: u64, domain: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(id);
    rng
}

/// Packs two 32-bit coordinates into one stream id.
pub fn pair(a: u64, b: u64) -> u64 {
    (a << 32) ^ (b & 0xFFFF_FFFF)
}
