//! Reproducible random streams.
//!
//! Every random draw in the crate comes from ChaCha8. Scene generation uses a
//! single generator seeded with `seed_from_u64`; the scan simulator keys one
//! ChaCha8 instance per `(seed, frame_id)` and gives each ray its own 64-bit
//! stream id (the ray index), so the draws a ray sees never depend on how rays
//! are scheduled across workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(parent, tag)`; used to give scenes and frames their own seeds.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix64(parent ^ mix64(tag.wrapping_add(GOLDEN_GAMMA)))
}

/// Per-ray generators for one frame.
#[derive(Clone, Debug)]
pub struct RayStreams {
    base: ChaCha8Rng,
}

impl RayStreams {
    /// The 256-bit key is four consecutive SplitMix64 outputs of `derive_seed(seed, frame_id)`.
    pub fn new(seed: u64, frame_id: u64) -> Self {
        let mut state = derive_seed(seed, frame_id);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        RayStreams { base: ChaCha8Rng::from_seed(key) }
    }

    pub fn stream(&self, ray_index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(ray_index);
        rng
    }
}
