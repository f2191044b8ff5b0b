//! Seeded random streams. Every episode gets its own ChaCha stream derived
//! from the master seed and the episode index, so results do not depend on
//! how episodes are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn episode_rng(seed: u64, episode: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}
