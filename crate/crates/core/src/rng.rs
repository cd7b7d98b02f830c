//! Deterministic random streams.
//!
//! Every sampling site draws from its own ChaCha8 stream keyed by
//! `(seed, domain, index)`, so results depend only on the run seed and the
//! logical position of the draw, never on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent purposes that consume randomness within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Domain {
    Secret = 1,
    Fortunes = 2,
    Distribution = 3,
    Attack = 4,
    DecoyCheck = 5,
    Validation = 6,
    Quantum = 7,
    Histogram = 8,
    Experiment = 9,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 40) ^ index);
    rng
}

pub fn from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
