//! Seed discipline: one root seed per replication, split into an
//! environment-generation stream and a trajectory stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TRAJECTORY_STREAM: u64 = 1;

/// Seed handed to the environment generators for a replication.
///
/// Generators draw from stream 0 of this seed, so the same environment is
/// shared by every learner run with the same root.
pub fn env_seed(root: u64) -> u64 {
    root
}

/// Generator for the learner's interaction with the environment.
pub fn trajectory_rng(root: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(TRAJECTORY_STREAM);
    rng
}
