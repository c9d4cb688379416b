//! Seed derivation and the crate-wide RNG type.
//!
//! All randomness flows from explicit `u64` seeds. Child seeds are derived by
//! mixing a parent seed with a stream tag and an index, so independent jobs
//! (records, folds, sweep cells) get independent, reproducible streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags keep derived seeds for different purposes apart.
pub mod stream {
    pub const RECORD: u64 = 0x7265_636f_7264;
    pub const NOISE: u64 = 0x006e_6f69_7365;
    pub const SIGNAL: u64 = 0x7369_676e_616c;
    pub const EVENT_TIME: u64 = 0x6576_7420;
    pub const LOADS: u64 = 0x006c_6f61_6473;
    pub const SPLIT: u64 = 0x0073_706c_6974;
    pub const FOLD: u64 = 0x666f_6c64;
    pub const TRAIN: u64 = 0x0074_7261_696e;
    pub const SUBSAMPLE: u64 = 0x7375_6273;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(parent, stream, index)`.
pub fn derive(parent: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(parent) ^ stream) ^ index)
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
