//! Seed derivation and stable hashing.
//!
//! Reproducibility across runs and platforms rests on two primitives:
//! ChaCha8 streams keyed by `u64` seeds, and the documented hashes below.
//! Parallel consumers split one base seed into independent per-item seeds
//! with [`splitmix64`] instead of sharing a stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer applied to `seed + (index + 1) * GOLDEN_GAMMA`.
///
/// Maps a (seed, index) pair to a well-mixed 64-bit value; used to derive
/// per-episode and per-stage seeds from one experiment seed.
pub fn splitmix64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a 64-bit over a byte slice.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// ChaCha8 stream for a derived seed.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed, index))
}
