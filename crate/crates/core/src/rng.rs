//! Seed derivation.
//!
//! Every stochastic routine takes a master seed. Independent streams come
//! from ChaCha8 stream selection: the stream id packs the replication index
//! into the high 32 bits, a purpose tag into the next 8 and a per-purpose
//! counter into the low 24. Streams never overlap, so replications can run
//! in any order or in parallel and still give bit-identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Graph = 1,
    Coefficients = 2,
    Data = 3,
    Nodes = 4,
    Misc = 5,
    /// Coefficients drawn afresh for each dataset.
    Redraw = 6,
}

/// Stream `(replication, purpose, counter)` of the generator seeded with
/// `seed`. `counter` must be below 2^24.
pub fn stream(seed: u64, replication: u32, purpose: Purpose, counter: u32) -> ChaCha8Rng {
    debug_assert!(counter < (1 << 24));
    let id = ((replication as u64) << 32) | ((purpose as u64) << 24) | (counter as u64 & 0xff_ffff);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// A generator for one-off use outside the replication scheme.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    stream(seed, 0, Purpose::Misc, 0)
}
