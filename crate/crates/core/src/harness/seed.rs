//! Order-independent seed derivation.
//!
//! `hash64(words)` starts from zero and folds each word in with
//! `h ← splitmix64(h ^ word)`. Trial seeds are `hash64([master, p, k, t])`;
//! the patterns and initial weights of a `(p, t)` cell come from a separate
//! domain so that every `k` retrieves from the same trained network, as does
//! the choice of which stored pattern is probed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pattern::Pattern;

const TRAINING_DOMAIN: u64 = 0x7472_6169_6e69_6e67;
const INIT_DOMAIN: u64 = 0x696e_6974;
const PROBE_DOMAIN: u64 = 0x0070_726f_6265;

/// The splitmix64 output function applied to `x + γ`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn hash64(words: &[u64]) -> u64 {
    words.iter().fold(0, |h, &w| splitmix64(h ^ w))
}

/// Seed recorded with a trial; drives the distortion of the probe.
pub fn trial_seed(master: u64, p: usize, k: usize, trial: usize) -> u64 {
    hash64(&[master, p as u64, k as u64, trial as u64])
}

/// Seed for the patterns stored in cell `(p, trial)`.
pub fn training_seed(master: u64, p: usize, trial: usize) -> u64 {
    hash64(&[TRAINING_DOMAIN, master, p as u64, trial as u64])
}

/// Seed for the initial weights of a training run.
pub fn init_seed(training_seed: u64) -> u64 {
    hash64(&[INIT_DOMAIN, training_seed])
}

/// Index in `0..p` of the stored pattern probed in a `(p, trial)` cell.
pub fn probe_index(training_seed: u64, p: usize) -> usize {
    (hash64(&[PROBE_DOMAIN, training_seed]) % p.max(1) as u64) as usize
}

/// `p` patterns with independent fair ±1 spins.
pub fn sample_patterns(n: usize, p: usize, seed: u64) -> Result<Vec<Pattern>> {
    if n == 0 || p == 0 {
        return Err(Error::invalid(format!("need N ≥ 1 and p ≥ 1, got N = {n}, p = {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..p).map(|_| Pattern::random(n, &mut rng)).collect())
}
