//! Reproducible random streams.
//!
//! Every consumer draws from a ChaCha stream keyed by `(seed, stream)`, so a
//! trial's randomness depends only on its coordinates and never on which
//! thread ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for `(trial, purpose)`; purposes stay below 16.
pub fn trial_stream(trial: u64, purpose: u64) -> u64 {
    debug_assert!(purpose < 16);
    (trial << 4) | purpose
}
