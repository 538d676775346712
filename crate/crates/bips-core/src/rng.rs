//! Stateless seed derivation.
//!
//! Every random decision in the pipeline (chart sampling, distractor choice,
//! rollout sampling, patch masking, data order) draws from a ChaCha8 stream
//! whose seed is derived from the run's master seed plus a label and a fixed
//! list of integer coordinates. Because derivation is a pure function, a
//! resumed run can re-create the exact stream for any step without replaying
//! history, and parallel execution cannot change what any consumer sees.

use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a. Used to fold string labels and element ids into seeds and
/// feature codes. Stable across platforms and releases, unlike the std hasher.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer. Decorrelates nearby seed inputs.
pub fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives a child seed from a master seed, a purpose label, and coordinates
/// such as step or item indices.
pub fn derive_seed(master: u64, label: &str, parts: &[u64]) -> u64 {
    let mut acc = splitmix(master ^ stable_hash(label.as_bytes()));
    for &p in parts {
        acc = splitmix(acc ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    acc
}

/// ChaCha8 stream for the given derivation path.
pub fn rng_from(master: u64, label: &str, parts: &[u64]) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, parts))
}
