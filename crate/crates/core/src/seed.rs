use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a base seed with a stream tag and an index into an independent seed.
pub fn derive(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(stream)) ^ index)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(base: u64, stream: u64, index: u64) -> Rng {
    rng(derive(base, stream, index))
}

// Stream tags keep independent consumers of one user seed from colliding.
pub const STREAM_SPLIT: u64 = 1;
pub const STREAM_TRAIN: u64 = 2;
pub const STREAM_SEARCH: u64 = 3;
pub const STREAM_BASELINE: u64 = 4;
pub const STREAM_DB_RUN: u64 = 5;
