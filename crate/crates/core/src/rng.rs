//! Seeded random streams.
//!
//! Every run derives all of its randomness from one 64-bit seed. The engine
//! draws from stream 0; each node draws from its own stream keyed by its id,
//! so adding or removing a node never shifts another node's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const ENGINE_STREAM: u64 = 0;

pub fn engine_rng(seed: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ENGINE_STREAM);
    rng
}

pub fn node_rng(seed: u64, node: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node.wrapping_add(1));
    rng
}

/// A uniform draw from `(0, 1]`.
pub fn unit_interval(rng: &mut impl rand::Rng) -> f64 {
    1.0 - rng.random::<f64>()
}
