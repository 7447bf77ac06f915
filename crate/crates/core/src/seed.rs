//! Substream seed derivation.
//!
//! Every random draw in the crate comes from a generator seeded with
//! `derive(master, stage, indices)`. The derivation hashes the stage name with
//! FNV-1a and folds the master seed and each index through the SplitMix64
//! finalizer, so the mapping is stable across platforms and releases and a
//! substream never depends on how many other substreams were consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a substream seed from the master seed, a stage label and indices.
pub fn derive(master: u64, stage: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ fnv1a(stage.as_bytes()));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i));
    }
    h
}

/// A generator for the given substream.
pub fn rng(master: u64, stage: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stage, indices))
}
