use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::UpdateMode;
use crate::rules::{RuleKind, RuleSpec};

/// Closed integer interval `start..=end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub start: usize,
    pub end: usize,
}

impl IntRange {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::invalid(format!("empty range {start}..={end}")));
        }
        Ok(IntRange { start, end })
    }

    pub fn single(value: usize) -> Self {
        IntRange { start: value, end: value }
    }

    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.end).collect()
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: usize) -> bool {
        (self.start..=self.end).contains(&v)
    }
}

impl std::fmt::Display for IntRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..={}", self.start, self.end)
    }
}

impl std::str::FromStr for IntRange {
    type Err = Error;

    /// Accepts `a`, `a..b`, `a..=b` or `a-b`, all inclusive.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad range `{s}`")))
        };
        let parts = ["..=", "..", "-"].iter().find_map(|sep| s.split_once(sep));
        match parts {
            Some((a, b)) => IntRange::new(parse(a)?, parse(b)?),
            None => parse(s).map(IntRange::single),
        }
    }
}

/// Which stored pattern a trial distorts and presents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSelection {
    /// Always the first pattern presented during training.
    First,
    /// One pattern per `(p, trial)` cell, uniform over the stored set.
    /// Incremental rules can favor early patterns, so this is the default.
    #[default]
    Uniform,
}

/// One retrieval-capacity experiment: a rule, a network size and the grid of
/// pattern loads `p` and distortion levels `k` to sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub rule: RuleSpec,
    pub p_range: IntRange,
    pub k_range: IntRange,
    pub trials: usize,
    pub epsilon: f64,
    pub master_seed: u64,
    pub update_mode: UpdateMode,
    pub max_sweeps: usize,
    /// Standard deviation of the initial weights; overrides `rule.init_std`.
    pub init_std: f64,
    #[serde(default)]
    pub probe: ProbeSelection,
}

pub const DEFAULT_EPSILON: f64 = 0.95;
pub const DEFAULT_MAX_SWEEPS: usize = 100;

impl ExperimentConfig {
    /// N = 32, 50 trials, p ∈ 1..=32, k ∈ 0..=16.
    pub fn desk(rule: RuleSpec) -> Self {
        ExperimentConfig {
            n: 32,
            init_std: rule.init_std,
            rule,
            p_range: IntRange { start: 1, end: 32 },
            k_range: IntRange { start: 0, end: 16 },
            trials: 50,
            epsilon: DEFAULT_EPSILON,
            master_seed: 0,
            update_mode: UpdateMode::Asynchronous,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            probe: ProbeSelection::Uniform,
        }
    }

    /// N = 75, 100 trials, p ∈ 1..=75, k ∈ 1..=37.
    pub fn full_scale(rule: RuleSpec) -> Self {
        ExperimentConfig {
            n: 75,
            p_range: IntRange { start: 1, end: 75 },
            k_range: IntRange { start: 1, end: 37 },
            trials: 100,
            ..ExperimentConfig::desk(rule)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("N must be positive"));
        }
        if self.p_range.start < 1 || self.p_range.end > self.n || self.p_range.start > self.p_range.end {
            return Err(Error::invalid(format!("p range {} must lie within 1..={}", self.p_range, self.n)));
        }
        if self.k_range.end > self.n / 2 || self.k_range.start > self.k_range.end {
            return Err(Error::invalid(format!("k range {} must lie within 0..={}", self.k_range, self.n / 2)));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return Err(Error::invalid(format!("init_std must be non-negative, got {}", self.init_std)));
        }
        self.rule.validate()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::desk(RuleSpec::defaults(RuleKind::Hebbian, true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let d = ExperimentConfig::default();
        assert_eq!((d.n, d.trials, d.p_range.len(), d.k_range.values().len()), (32, 50, 32, 17));
        d.validate().unwrap();
        let p = ExperimentConfig::full_scale(d.rule.clone());
        assert_eq!((p.n, p.trials, p.p_range, p.k_range), (75, 100, IntRange { start: 1, end: 75 }, IntRange { start: 1, end: 37 }));
        assert_eq!(p.epsilon, 0.95);
        p.validate().unwrap();
    }

    #[test]
    fn ranges_parse() {
        assert_eq!("3".parse::<IntRange>().unwrap(), IntRange::single(3));
        assert_eq!("1..5".parse::<IntRange>().unwrap(), IntRange { start: 1, end: 5 });
        assert_eq!("1..=5".parse::<IntRange>().unwrap(), IntRange { start: 1, end: 5 });
        assert_eq!("0-16".parse::<IntRange>().unwrap(), IntRange { start: 0, end: 16 });
        assert!("5..1".parse::<IntRange>().is_err());
        assert!("x".parse::<IntRange>().is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::default();
        let bad = [
            ExperimentConfig { p_range: IntRange { start: 0, end: 3 }, ..ok.clone() },
            ExperimentConfig { p_range: IntRange { start: 1, end: 33 }, ..ok.clone() },
            ExperimentConfig { k_range: IntRange { start: 0, end: 17 }, ..ok.clone() },
            ExperimentConfig { epsilon: 0.0, ..ok.clone() },
            ExperimentConfig { epsilon: 1.5, ..ok.clone() },
            ExperimentConfig { trials: 0, ..ok.clone() },
            ExperimentConfig { max_sweeps: 0, ..ok.clone() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
