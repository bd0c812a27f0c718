//! Keyed random streams.
//!
//! Every random draw in the generator comes from a ChaCha8 stream whose key is
//! derived from `(master_seed, sample_index, stage, attempt)`. Streams never
//! depend on scheduling, so output is identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Pipeline stage that owns a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    Pose = 1,
    Scene = 2,
    Mask = 3,
    Jitter = 4,
    Clusters = 5,
    Test = 0xff,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit seed for a sample, stored in record metadata.
pub fn sample_seed(master_seed: u64, sample_index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ splitmix64(sample_index.wrapping_add(GOLDEN)))
}

/// Stream for one stage of one sample. `attempt` separates redraws.
pub fn stream(master_seed: u64, sample_index: u64, stage: Stage, attempt: u32) -> Stream {
    let base = sample_seed(master_seed, sample_index);
    let mut state = base ^ splitmix64((stage as u64) << 32 | attempt as u64);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Stream from a bare seed, for standalone module use.
pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
