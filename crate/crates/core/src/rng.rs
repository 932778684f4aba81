//! Counter-based random substreams.
//!
//! Every consumer (a Monte Carlo repetition, a bootstrap replicate) gets its own
//! ChaCha stream keyed by a master seed and addressed by an index, so results do
//! not depend on scheduling or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `index` under `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
