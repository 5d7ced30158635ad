// SPDX-License-Identifier: Apache-2.0

//! Sub-seed derivation. Every stochastic stage draws from its own
//! ChaCha stream derived from the run seed, a stage tag and an index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STAGE_KMEANS: u64 = 1;
pub const STAGE_TSNE: u64 = 2;
pub const STAGE_SYNTH: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stage: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stage) ^ index)
}

pub fn rng_for(seed: u64, stage: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stage, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ() {
        assert_ne!(derive_seed(7, STAGE_KMEANS, 0), derive_seed(7, STAGE_KMEANS, 1));
        assert_ne!(derive_seed(7, STAGE_KMEANS, 0), derive_seed(7, STAGE_TSNE, 0));
        assert_eq!(derive_seed(7, STAGE_TSNE, 3), derive_seed(7, STAGE_TSNE, 3));
    }
}
