//! Seeded, splittable randomness.
//!
//! Every random draw in the crate goes through a ChaCha8 generator seeded
//! from a master seed mixed with a stream label, so results do not depend on
//! evaluation order or threading.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer over `master ^ stream`, used to derive child seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}
