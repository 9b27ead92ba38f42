//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit [`SimRng`]. Independent
//! streams are derived from a master seed with [`stream`]: the ChaCha key is
//! expanded from the master seed and the 64-bit ChaCha stream id is a
//! SplitMix64 fold of the label path, e.g. `[purpose, sweep_index, trial]`.
//! Two different paths never share a keystream, so parallel Monte-Carlo
//! trials are reproducible regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a label path.
pub fn stream_id(path: &[u64]) -> u64 {
    path.iter().fold(0x6A09_E667_F3BC_C908, |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Derives the stream identified by `path` from `seed`.
pub fn stream(seed: u64, path: &[u64]) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(path));
    rng
}

/// Stream labels used by the experiment harness.
pub mod purpose {
    pub const CHANNEL: u64 = 1;
    pub const BASELINE: u64 = 2;
    pub const PSO: u64 = 3;
    pub const SAMPLES: u64 = 4;
    pub const EVALUATION: u64 = 5;
    pub const PLACEMENT: u64 = 6;
}
