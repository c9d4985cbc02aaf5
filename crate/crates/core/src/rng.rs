//! Seed derivation and random stream construction.
//!
//! All randomness in the crate flows through [`stream`]: a ChaCha generator
//! keyed by a base seed plus a list of integer salts (run index, step,
//! member id, purpose tag). Streams with different salts are independent,
//! and the same salts always reproduce the same stream, which is what makes
//! intervention arms comparable and runs replayable from a manifest.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Purpose tags keeping derived streams disjoint. Values are arbitrary but
/// fixed forever; changing them changes every output byte.
pub mod salt {
    pub const GROUP_MEANS: u64 = 0x01;
    pub const POPULATION: u64 = 0x02;
    pub const SBM: u64 = 0x03;
    pub const NORMALIZERS: u64 = 0x04;
    pub const INITIAL_WAITS: u64 = 0x05;
    pub const STEP: u64 = 0x06;
    pub const WAIT: u64 = 0x07;
    pub const RUN: u64 = 0x08;
    pub const MPA: u64 = 0x09;
}

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of salts into a single 64-bit seed.
pub fn mix_seed(base: u64, salts: &[u64]) -> u64 {
    let mut acc = splitmix64(base);
    for &s in salts {
        acc = splitmix64(acc ^ splitmix64(s));
    }
    acc
}

/// A seeded generator for the given (base, salts) key.
pub fn stream(base: u64, salts: &[u64]) -> SimRng {
    SimRng::seed_from_u64(mix_seed(base, salts))
}

/// FNV-1a over bytes; used to fingerprint configurations in CSV headers.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
