//! Experiment settings gathered from a preset, an optional TOML file and
//! command-line flags, in increasing order of precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use hopnet::harness::{ExperimentConfig, IntRange, ProbeSelection};
use hopnet::{RuleKind, RuleSpec, UpdateMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `on`/`off` in flags; `true`/`false` or `"on"`/`"off"` in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SwitchRepr", into = "bool")]
pub struct Switch(pub bool);

#[derive(Deserialize)]
#[serde(untagged)]
enum SwitchRepr {
    Bool(bool),
    Text(String),
}

impl TryFrom<SwitchRepr> for Switch {
    type Error = String;

    fn try_from(repr: SwitchRepr) -> Result<Self, String> {
        match repr {
            SwitchRepr::Bool(b) => Ok(Switch(b)),
            SwitchRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        s.0
    }
}

impl FromStr for Switch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "on" | "true" | "yes" | "1" => Ok(Switch(true)),
            "off" | "false" | "no" | "0" => Ok(Switch(false)),
            _ => Err(format!("expected on or off, got `{s}`")),
        }
    }
}

/// A range given as `a`, `a..b`, `a..=b` or `a-b` (both ends inclusive), or
/// as a bare integer or `{ start, end }` table in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "String")]
pub struct RangeArg(pub IntRange);

#[derive(Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    One(usize),
    Text(String),
    Table { start: usize, end: usize },
}

impl TryFrom<RangeRepr> for RangeArg {
    type Error = String;

    fn try_from(repr: RangeRepr) -> Result<Self, String> {
        match repr {
            RangeRepr::One(v) => Ok(RangeArg(IntRange::single(v))),
            RangeRepr::Text(s) => s.parse(),
            RangeRepr::Table { start, end } => IntRange::new(start, end).map(RangeArg).map_err(|e| e.to_string()),
        }
    }
}

impl From<RangeArg> for String {
    fn from(r: RangeArg) -> String {
        r.0.to_string()
    }
}

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<IntRange>().map(RangeArg).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[value(alias = "synchronous")]
    #[serde(alias = "synchronous")]
    Sync,
    #[value(alias = "asynchronous")]
    #[serde(alias = "asynchronous")]
    Async,
}

impl From<Mode> for UpdateMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sync => UpdateMode::Synchronous,
            Mode::Async => UpdateMode::Asynchronous,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    First,
    Uniform,
}

impl From<Probe> for ProbeSelection {
    fn from(p: Probe) -> Self {
        match p {
            Probe::First => ProbeSelection::First,
            Probe::Uniform => ProbeSelection::Uniform,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// N = 32, 50 trials.
    Desk,
    /// N = 75, 100 trials.
    #[value(name = "paper", alias = "full")]
    #[serde(rename = "paper", alias = "full")]
    Full,
}

pub fn parse_rule(s: &str) -> Result<RuleKind, String> {
    s.parse::<RuleKind>().map_err(|e| e.to_string())
}

/// Every field is optional so that layers can be merged.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct Settings {
    /// Learning rule.
    #[arg(long, value_parser = parse_rule)]
    pub rule: Option<RuleKind>,
    /// Present patterns one at a time (on) or all at once (off).
    #[arg(long, value_name = "on|off")]
    pub incremental: Option<Switch>,
    /// Number of neurons.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of stored patterns, or a range of them.
    #[arg(long, value_name = "RANGE")]
    pub p: Option<RangeArg>,
    /// Number of flipped spins, or a range of them.
    #[arg(long, value_name = "RANGE")]
    pub k: Option<RangeArg>,
    /// Trials per (p, k) cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Overlap threshold defining successful retrieval, in (0, 1].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Self-coupling (diagonal weights).
    #[arg(long, value_name = "on|off")]
    pub sc: Option<Switch>,
    /// Update mode of the dynamics.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Worker threads; 0 picks one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Sweep budget of the dynamics.
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Standard deviation of the Gaussian initial weights.
    #[arg(long)]
    pub init_std: Option<f64>,
    /// Which stored pattern each trial distorts.
    #[arg(long, value_enum)]
    pub probe: Option<Probe>,
    /// Base experiment sizes.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Stopping tolerance on the largest weight update.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration budget of iterative rules.
    #[arg(long)]
    pub maxiter: Option<usize>,
    /// Normalized margin target of the Gardner rule.
    #[arg(long)]
    pub margin_k: Option<f64>,
    /// Newton acceleration of the quadratic descent rules.
    #[arg(long, value_name = "on|off")]
    pub newton: Option<Switch>,
    /// Truncate the Newton inverse to this many series terms.
    #[arg(long)]
    pub neumann_terms: Option<usize>,
}

macro_rules! overlay {
    ($top:expr, $bottom:expr; $($field:ident),*) => {
        Settings { $($field: $top.$field.or($bottom.$field)),* }
    };
}

/// The settings after merging, turned into library types.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub workers: Option<usize>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over those in `below`.
    pub fn over(self, below: Settings) -> Settings {
        overlay!(self, below; rule, incremental, n, p, k, trials, eps, seed, sc, mode, workers,
            max_sweeps, init_std, probe, preset, lambda, alpha, lr, tol, maxiter, margin_k,
            newton, neumann_terms)
    }

    /// Flags merged over the config file, if any.
    pub fn layered(self, config: Option<&PathBuf>) -> Result<Settings, CliError> {
        match config {
            Some(path) => Ok(self.over(Settings::from_file(path)?)),
            None => Ok(self),
        }
    }

    /// Rule defaults for `kind` with every explicitly set hyperparameter applied.
    pub fn rule_spec(&self, kind: RuleKind) -> RuleSpec {
        let incremental = self.incremental.is_some_and(|s| s.0);
        let mut spec = RuleSpec::defaults(kind, incremental);
        if let Some(v) = self.lambda {
            spec.lambda = v;
        }
        if let Some(v) = self.alpha {
            spec.alpha = v;
        }
        if let Some(v) = self.lr {
            spec.lr = v;
        }
        if let Some(v) = self.tol {
            spec.tol = v;
        }
        if let Some(v) = self.maxiter {
            spec.maxiter = v;
        }
        if let Some(v) = self.margin_k {
            spec.margin_k = v;
        }
        if let Some(v) = self.sc {
            spec.sc = v.0;
        }
        if let Some(v) = self.newton {
            spec.newton = v.0;
        }
        if self.neumann_terms.is_some() {
            spec.neumann_terms = self.neumann_terms;
        }
        if let Some(v) = self.init_std {
            spec.init_std = v;
        }
        spec
    }

    /// Builds and validates the experiment for `kind`. Ranges not given
    /// explicitly follow `n`: p over `1..=n` and k up to `n / 2`.
    pub fn experiment(&self, kind: RuleKind) -> Result<ExperimentConfig, CliError> {
        let spec = self.rule_spec(kind);
        let mut cfg = match self.preset.unwrap_or(Preset::Desk) {
            Preset::Desk => ExperimentConfig::desk(spec),
            Preset::Full => ExperimentConfig::full_scale(spec),
        };
        if let Some(n) = self.n {
            cfg.n = n;
            cfg.p_range = IntRange { start: 1, end: n.max(1) };
            cfg.k_range = IntRange { start: cfg.k_range.start.min(n / 2), end: n / 2 };
        }
        if let Some(p) = self.p {
            cfg.p_range = p.0;
        }
        if let Some(k) = self.k {
            cfg.k_range = k.0;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.eps {
            cfg.epsilon = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.mode {
            cfg.update_mode = v.into();
        }
        if let Some(v) = self.max_sweeps {
            cfg.max_sweeps = v;
        }
        if let Some(v) = self.probe {
            cfg.probe = v.into();
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        Ok(Resolved {
            experiment: self.experiment(self.rule.unwrap_or(RuleKind::Hebbian))?,
            workers: self.workers,
        })
    }

    /// Epsilon on its own, for commands that only post-process a grid.
    pub fn epsilon(&self) -> Result<f64, CliError> {
        let eps = self.eps.unwrap_or(hopnet::harness::DEFAULT_EPSILON);
        if eps > 0.0 && eps <= 1.0 {
            Ok(eps)
        } else {
            Err(CliError::Usage(format!("epsilon must lie in (0, 1], got {eps}")))
        }
    }
}

impl fmt::Display for Resolved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let json = serde_json::to_string_pretty(self).map_err(|_| fmt::Error)?;
        write!(f, "{json}")
    }
}
