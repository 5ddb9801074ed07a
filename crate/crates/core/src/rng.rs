//! Deterministic random streams.
//!
//! Every consumer gets its own ChaCha8 stream derived from the master seed,
//! a purpose tag and a 64-bit stream index. A realization, molecule or trial
//! batch therefore sees the same numbers regardless of how work is spread
//! over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Population placement and switching, one stream per realization.
    Realization,
    /// Brownian increments, one stream per (realization, molecule).
    Propagation,
    /// Bit and reception draws for Monte-Carlo BER, one stream per batch.
    BerTrials,
    /// Standalone sampling from the binomial reception law.
    Reception,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Realization => 0x5245_414c,
            Purpose::Propagation => 0x5052_4f50,
            Purpose::BerTrials => 0x4245_5254,
            Purpose::Reception => 0x5245_4350,
        }
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    master_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, purpose: Purpose, index: u64) -> Stream {
        let key = mix(self.master_seed ^ mix(purpose.tag()));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }
}

/// Packs a (realization, molecule) pair into one stream index.
pub fn molecule_stream_index(realization: u64, molecule: u64) -> u64 {
    debug_assert!(realization < (1 << 32) && molecule < (1 << 32));
    (realization << 32) | molecule
}
