//! Seeded random substreams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream keyed by
//! `(seed, domain)` and selected by a 64-bit index, so replicate `b` of a
//! bootstrap (or of a Monte Carlo study) sees the same numbers no matter how
//! many threads run or in which order replicates complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keeping independent consumers of one seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Bootstrap = 1,
    Folds = 2,
    Covariate = 3,
    Error = 4,
    Replicate = 5,
    Oracle = 6,
    Aux = 7,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `index` of the family keyed by `(seed, domain)`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ (domain as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. the per-replicate test seed inside a study.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    let mut state = seed ^ (domain as u64).rotate_left(17) ^ index.wrapping_mul(0xA24B_AED4_963E_E407);
    splitmix64(&mut state)
}
