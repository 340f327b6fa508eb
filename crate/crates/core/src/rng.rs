//! Deterministic, splittable random streams.
//!
//! A stream is identified by `(seed, stream_id)` and backed by ChaCha8 using
//! the stream id as the ChaCha stream selector, so distinct ids never overlap.
//! Substreams are derived by hashing, which lets a caller hand out one stream
//! per replicate and split it further by purpose (lifetimes, proxies,
//! censoring) without any shared state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive combination of two words.
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(17) ^ 0x5851_F42D_4C95_7F2D)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream tagged by `tag`. Children of distinct tags, and children of
    /// distinct parents, are distinct streams.
    pub fn substream(&self, tag: u64) -> RngStream {
        RngStream {
            seed: combine(self.seed, self.stream_id),
            stream_id: tag,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
