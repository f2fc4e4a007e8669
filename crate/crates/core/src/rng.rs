//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), keyed by
//! `seed_from_u64(seed)` and split into independent substreams with
//! `set_stream(stream)`. Derived seeds for sub-tasks are the first `u64` of
//! stream `DERIVE_STREAM | index`, which never collides with the small
//! stream indices used for shot batches.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALGORITHM: &str = "chacha8";

const DERIVE_STREAM: u64 = 1 << 63;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn derive_seed(seed: u64, index: u64) -> u64 {
    stream_rng(seed, DERIVE_STREAM | index).next_u64()
}

/// Uniform double in `[0, 1)` from the top 53 bits of one `u64`.
pub fn uniform01(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
