//! Reproducible random streams.
//!
//! Every Monte Carlo loop in the crate draws from ChaCha8 substreams keyed by
//! `(seed, stream id)`. Work is split into fixed-size chunks and chunk `k`
//! always reads stream `k`, so results never depend on how many threads ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Independent substream `id` of the master `seed`.
pub fn stream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Mixes a purpose tag and an index into a seed (splitmix64 finalizer), so that
/// e.g. optimizer step 7 and diagnostic point 7 never share draws.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut x = seed
        ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub(crate) mod tags {
    pub const OPT_STEP: u64 = 1;
    pub const OPT_ELBO: u64 = 2;
    pub const DIAGNOSE: u64 = 3;
    pub const VERIFY: u64 = 4;
}
