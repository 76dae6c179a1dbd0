//! Seeded random streams.
//!
//! Every consumer derives its generator from a `(seed, stream)` key. ChaCha20
//! streams with different stream ids are independent, so adding or removing
//! one consumer never shifts another's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
