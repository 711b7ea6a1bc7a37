//! Seed derivation.
//!
//! Every random stream in a trial is keyed by a tuple such as
//! `(root seed, scenario, datum, algorithm)`. Keys are mixed with SplitMix64
//! so the result depends only on the tuple, never on evaluation order or the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream used throughout the crate. ChaCha output is specified
/// bit-for-bit, so seeded runs are reproducible across platforms.
pub type Stream = ChaCha8Rng;

pub const TAG_TOPOLOGY: u64 = 0x746f_706f;
pub const TAG_WORKLOAD: u64 = 0x776f_726b;
pub const TAG_EXERCISES: u64 = 0x6578_6572;
pub const TAG_REQUESTER: u64 = 0x7265_7175;
pub const TAG_OPTIMIZER: u64 = 0x6f70_7469;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(root), |h, &p| splitmix64(h ^ splitmix64(p.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// FNV-1a over the UTF-8 bytes; stable across builds unlike `DefaultHasher`.
pub fn stable_id(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn stream(root: u64, parts: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(root, parts))
}
