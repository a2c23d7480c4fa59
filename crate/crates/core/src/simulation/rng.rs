//! Per-replication random streams.
//!
//! Replication `r` of a run with master seed `s` uses the seed
//! `derive_seed(s, r)`, which keys a ChaCha8 stream. ChaCha is a counter-mode
//! generator, so each stream is a pure function of its seed and never depends
//! on which worker executes it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `hash64(master, r)`: injective in `r` for a fixed master seed.
pub fn derive_seed(master: u64, replication: u64) -> u64 {
    splitmix64(splitmix64(master) ^ replication.wrapping_mul(GOLDEN_GAMMA))
}

/// ChaCha8 stream keyed by a 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&state.to_le_bytes());
        state = splitmix64(state);
    }
    ChaCha8Rng::from_seed(key)
}

pub fn replication_rng(master: u64, replication: u64) -> ChaCha8Rng {
    seeded_rng(derive_seed(master, replication))
}
