//! Counter-based random streams.
//!
//! Every sample of a corpus owns an [`RngStream`] keyed by `(seed, stream_id)`.
//! The stream maps onto a ChaCha8 key/stream pair, so draws depend only on the
//! key and never on which thread or in which order samples are produced.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identifies one reproducible sequence of random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent sub-stream for one purpose (mask, alpha, noise, ...) of the same sample.
    pub fn fork(&self, tag: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x5EED))),
            stream_id: self.stream_id,
        }
    }

    /// Stream for the `index`-th item nested under this one.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_mul(0xA24B_AED4_963E_E407))),
            stream_id: index,
        }
    }
}
