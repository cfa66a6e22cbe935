//! Seeded, splittable random streams.
//!
//! Every consumer of randomness draws from a ChaCha8 stream keyed by the run
//! seed and a stream id, so the queue, the channel noise and each coding
//! trial get independent, reproducible sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Well-known stream ids.
pub mod streams {
    pub const ARRIVALS: u64 = 1;
    pub const SERVICE: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const MESSAGES: u64 = 4;
    pub const CODEBOOK: u64 = 5;
    /// Per-trial streams start here; trial `i` uses `TRIALS + i`.
    pub const TRIALS: u64 = 1 << 32;
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
