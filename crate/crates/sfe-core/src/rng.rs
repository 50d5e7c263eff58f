//! Seed handling: one user-facing 64-bit seed, split into independent
//! streams by a counter so parallel work stays deterministic.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SplitRng = ChaCha8Rng;

/// Stream `index` of the generator family identified by `seed`. Streams
/// are statistically independent, so restarts, trials, and instances can
/// each take their own without sequencing constraints.
pub fn stream(seed: u64, index: u64) -> SplitRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
