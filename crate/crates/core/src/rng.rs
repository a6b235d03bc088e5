//! Counter-based random substreams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream keyed by the
//! master seed and selected by `(index, domain)`. Trials therefore never share
//! state and can be evaluated in any order or on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Separates the draws made for different purposes within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Channel = 1,
    Codebook = 2,
    RandomPlan = 3,
    SharedCodebook = 4,
    Direction = 5,
    Scalar = 6,
}

const DOMAIN_BITS: u32 = 4;

/// Returns the substream for trial `index` in `domain` under `master`.
pub fn substream(master: u64, index: u64, domain: Domain) -> SimRng {
    debug_assert!(index < (1 << (64 - DOMAIN_BITS)));
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((index << DOMAIN_BITS) | domain as u64);
    rng
}
