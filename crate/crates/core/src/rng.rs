//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator (a counter-based cipher) seeded by
//! the user seed and positioned on a stream id derived from a text key, so
//! `(seed, "awgn")` and `(seed, "emg_burst")` never share samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a, used only to turn stream keys into stream ids.
fn key_hash(key: &str) -> u64 {
    key.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn stream(seed: u64, key: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key_hash(key));
    rng
}

/// Sub-stream keyed by an additional index, e.g. a channel or an epoch.
pub fn substream(seed: u64, key: &str, index: u64) -> ChaCha8Rng {
    stream(seed, &format!("{key}/{index}"))
}
