//! Seeded random number generation.
//!
//! Every stochastic step (initialization, dropout, shuffles, negative
//! sampling) draws from a ChaCha stream with 8 rounds, seeded from a `u64`.
//! ChaCha output is defined bit-for-bit independent of platform, so a run is
//! reproducible anywhere given its seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Name recorded in run reports.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a sub-task of a seeded run.
pub fn derive(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
