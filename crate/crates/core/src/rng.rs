//! Seed fan-out.
//!
//! A run is identified by one `u64` seed. Every consumer of randomness gets
//! its own ChaCha8 stream: the generator is keyed by the run seed and the
//! stream id selects the sub-stream, so draws in one stream never shift the
//! draws of another. Turning augmentation on or off therefore leaves the
//! split, the initial weights and the dropout masks untouched.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    Split = 2,
    Init = 3,
    Dropout = 4,
    VirtualEdges = 5,
    Baseline = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Stream for one step of a per-epoch consumer (dropout masks, edge
/// sampling). Each epoch restarts from a fresh position, so the number of
/// values drawn in one epoch never shifts the next.
pub fn epoch_stream(seed: u64, which: Stream, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((which as u64) << 32) | epoch as u64);
    rng
}
