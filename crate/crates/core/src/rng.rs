//! Reproducible random streams.
//!
//! Every sampling routine takes a [`StreamSeed`] instead of a generator. A
//! seed names a master key; `rng(id)` opens ChaCha8 stream `id` under that
//! key, and `child(id)` derives an independent key for nested work units
//! (replicate, then sequence within the replicate). Results therefore do not
//! depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed(pub u64);

impl StreamSeed {
    pub fn new(master: u64) -> Self {
        Self(master)
    }

    /// Generator for stream `id` under this key.
    pub fn rng(&self, id: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(id);
        rng
    }

    /// Independent key for sub-unit `id` of this work unit.
    pub fn child(&self, id: u64) -> StreamSeed {
        StreamSeed(splitmix64(self.0 ^ splitmix64(id.wrapping_add(0x632B_E59B_D9B4_E019))))
    }
}

impl From<u64> for StreamSeed {
    fn from(v: u64) -> Self {
        Self(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
