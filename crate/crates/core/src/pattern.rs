//! Binary spin patterns and the operations the recall protocol needs on them.

use std::fmt;

use nalgebra::DVector;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of ±1 spins. Doubles as a network state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Pattern(Vec<i8>);

impl Pattern {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::invalid("pattern must have at least one spin"));
        }
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!(
                "spin {pos} is {}, expected -1 or +1",
                spins[pos]
            )));
        }
        Ok(Pattern(spins))
    }

    /// Builds a pattern from signs: non-negative values map to +1.
    pub fn from_signs(values: &[f64]) -> Result<Self> {
        Pattern::new(values.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect())
    }

    pub fn all_up(n: usize) -> Self {
        Pattern(vec![1; n])
    }

    /// Each spin is +1 with probability 1/2, independently.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Pattern((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub(crate) fn set(&mut self, i: usize, spin: i8) {
        debug_assert!(spin == 1 || spin == -1);
        self.0[i] = spin;
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|&s| f64::from(s)))
    }

    pub fn negated(&self) -> Self {
        Pattern(self.0.iter().map(|&s| -s).collect())
    }

    pub fn augmented(&self) -> AugmentedPattern {
        AugmentedPattern(self.clone())
    }

    pub fn hamming(&self, other: &Pattern) -> Result<usize> {
        Error::check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }

    /// Negates exactly `k_flips` distinct positions chosen uniformly from a
    /// generator seeded with `seed`.
    pub fn distort(&self, k_flips: usize, seed: u64) -> Result<Pattern> {
        if k_flips > self.len() {
            return Err(Error::invalid(format!(
                "cannot flip {k_flips} spins of a {}-spin pattern",
                self.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for i in index::sample(&mut rng, self.len(), k_flips) {
            out.0[i] = -out.0[i];
        }
        Ok(out)
    }
}

impl TryFrom<Vec<i8>> for Pattern {
    type Error = Error;

    fn try_from(spins: Vec<i8>) -> Result<Self> {
        Pattern::new(spins)
    }
}

impl From<Pattern> for Vec<i8> {
    fn from(p: Pattern) -> Self {
        p.0
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// A pattern with an extra always-on unit appended, so that a bias can be
/// treated as one more incoming weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedPattern(Pattern);

impl AugmentedPattern {
    /// Length N + 1.
    pub fn len(&self) -> usize {
        self.0.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn pattern(&self) -> &Pattern {
        &self.0
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.0.len();
        DVector::from_fn(n + 1, |i, _| if i < n { self.0.get(i) } else { 1.0 })
    }
}

/// Normalized inner product, in [-1, 1].
pub fn overlap(a: &Pattern, b: &Pattern) -> Result<f64> {
    Error::check_len(a.len(), b.len())?;
    let dot: i64 = a.0.iter().zip(&b.0).map(|(&x, &y)| i64::from(x * y)).sum();
    Ok(dot as f64 / a.len() as f64)
}
