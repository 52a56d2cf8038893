//! Learning rules behind a uniform `train` entry point.
//!
//! Every rule adjusts the afferent weights and bias of each neuron
//! independently of the other neurons: the stability constraints of neuron
//! `i` involve only `(ω_i, b_i)`.

mod classical;
mod descent;
mod perceptron;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{stability_margins, NetworkParams};
use crate::pattern::Pattern;

pub use classical::{hebbian_step, hebbian_train, pseudo_inverse_train, storkey_step, storkey_train};
pub use descent::{
    descent_l1_step, descent_l2_step, exp_barrier_si_step, exp_barrier_step, neuron_objective, newton_l2_batch,
    newton_l2_incremental, Objective, SiStep, EXPONENT_CLAMP,
};
pub use perceptron::{gardner_krauth_mezard_train, krauth_mezard_train};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Hebbian,
    Storkey,
    #[serde(rename = "pseudoinverse", alias = "pseudo_inverse")]
    PseudoInverse,
    DiederichOpperI,
    #[serde(rename = "diederich_opper_ii")]
    DiederichOpperII,
    KrauthMezard,
    GardnerKrauthMezard,
    DescentL1,
    DescentL2,
    DescentExpBarrier,
    DescentExpBarrierSi,
}

impl RuleKind {
    pub const ALL: [RuleKind; 11] = [
        RuleKind::Hebbian,
        RuleKind::Storkey,
        RuleKind::PseudoInverse,
        RuleKind::DiederichOpperI,
        RuleKind::DiederichOpperII,
        RuleKind::KrauthMezard,
        RuleKind::GardnerKrauthMezard,
        RuleKind::DescentL1,
        RuleKind::DescentL2,
        RuleKind::DescentExpBarrier,
        RuleKind::DescentExpBarrierSi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Hebbian => "hebbian",
            RuleKind::Storkey => "storkey",
            RuleKind::PseudoInverse => "pseudoinverse",
            RuleKind::DiederichOpperI => "diederich_opper_i",
            RuleKind::DiederichOpperII => "diederich_opper_ii",
            RuleKind::KrauthMezard => "krauth_mezard",
            RuleKind::GardnerKrauthMezard => "gardner_krauth_mezard",
            RuleKind::DescentL1 => "descent_l1",
            RuleKind::DescentL2 => "descent_l2",
            RuleKind::DescentExpBarrier => "descent_exp_barrier",
            RuleKind::DescentExpBarrierSi => "descent_exp_barrier_si",
        }
    }

    pub fn valid_names() -> String {
        RuleKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        if key == "pseudo_inverse" {
            return Ok(RuleKind::PseudoInverse);
        }
        RuleKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown rule `{s}`; valid rules: {}", RuleKind::valid_names())))
    }
}

pub const DEFAULT_INIT_STD: f64 = 0.01;
pub const DEFAULT_MAXITER: usize = 1000;

/// A rule together with all of its hyperparameters. Parameters a rule does
/// not use are carried along untouched.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub kind: RuleKind,
    pub lambda: f64,
    pub alpha: f64,
    pub lr: f64,
    pub tol: f64,
    pub maxiter: usize,
    pub margin_k: f64,
    pub sc: bool,
    pub incremental: bool,
    /// Newton steps instead of first-order steps (DescentL2 only).
    pub newton: bool,
    /// Batch Newton with a truncated Neumann inverse of this many terms;
    /// `None` inverts the Hessian exactly.
    pub neumann_terms: Option<usize>,
    pub init_std: f64,
}

impl RuleSpec {
    /// Parameters from the published incremental / non-incremental tables.
    /// Values the tables leave blank: `lr = 1e-2`, `maxiter = 1000`,
    /// `λ = 1` and `α = 0` for the Diederich–Opper rules, `init_std = 0.01`
    /// except for the perceptron rules, which start from zero.
    pub fn defaults(kind: RuleKind, incremental: bool) -> Self {
        let descent_tol = if incremental { 0.1 } else { 1e-3 };
        let base = RuleSpec {
            kind,
            lambda: 1.0,
            alpha: 0.0,
            lr: 1e-2,
            tol: descent_tol,
            maxiter: DEFAULT_MAXITER,
            margin_k: 0.0,
            sc: true,
            incremental,
            newton: false,
            neumann_terms: None,
            init_std: DEFAULT_INIT_STD,
        };
        match kind {
            RuleKind::Hebbian | RuleKind::Storkey | RuleKind::PseudoInverse => base,
            RuleKind::DiederichOpperI | RuleKind::DiederichOpperII => RuleSpec { tol: 0.1, ..base },
            // The perceptron rules start from a blank slate: with random
            // initial weights, neurons whose margins are already positive
            // would never be trained.
            RuleKind::KrauthMezard => RuleSpec {
                maxiter: 200,
                init_std: 0.0,
                ..base
            },
            RuleKind::GardnerKrauthMezard => RuleSpec {
                maxiter: 100,
                margin_k: 1.0,
                init_std: 0.0,
                ..base
            },
            RuleKind::DescentL1 | RuleKind::DescentExpBarrier => RuleSpec {
                lambda: 0.5,
                alpha: 1e-3,
                ..base
            },
            RuleKind::DescentL2 => RuleSpec {
                lambda: 0.5,
                alpha: 1e-3,
                newton: !incremental,
                ..base
            },
            RuleKind::DescentExpBarrierSi => RuleSpec { lambda: 0.5, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("lambda", self.lambda), ("lr", self.lr), ("tol", self.tol)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [("alpha", self.alpha), ("margin_k", self.margin_k), ("init_std", self.init_std)];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.maxiter == 0 {
            return Err(Error::invalid("maxiter must be at least 1"));
        }
        if self.neumann_terms == Some(0) {
            return Err(Error::invalid("neumann_terms must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Iterations of the rule's outer loop (sweeps, epochs, or per-neuron updates).
    pub sweeps_used: usize,
    /// Sum over neurons of the rule's objective, for rules that minimize one.
    pub final_objective: Option<f64>,
    pub converged: bool,
    /// Smallest raw stability margin over all stored patterns and neurons.
    pub min_margin: f64,
    /// Neurons whose scale-invariant update fell back to the plain barrier
    /// because their augmented weight vector was zero.
    #[serde(default)]
    pub si_fallbacks: usize,
}

/// Gaussian initial weights and biases, symmetrized, diagonal zeroed unless
/// self-coupling is on.
pub fn init_params(n: usize, sc: bool, init_std: f64, seed: u64) -> Result<NetworkParams> {
    if n == 0 {
        return Err(Error::invalid("network size must be positive"));
    }
    if !(init_std.is_finite() && init_std >= 0.0) {
        return Err(Error::invalid(format!("init_std must be non-negative, got {init_std}")));
    }
    if init_std == 0.0 {
        return Ok(NetworkParams::zeros(n, sc));
    }
    let normal = Normal::new(0.0, init_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, n, |_, _| normal.sample(&mut rng));
    let biases = DVector::from_fn(n, |_, _| normal.sample(&mut rng));
    let weights = (&raw + raw.transpose()) * 0.5;
    NetworkParams::from_parts(weights, biases, sc)
}

pub(crate) fn check_patterns(n: usize, patterns: &[Pattern]) -> Result<()> {
    for p in patterns {
        Error::check_len(n, p.len())?;
    }
    Ok(())
}

pub(crate) fn min_raw_margin(params: &NetworkParams, patterns: &[Pattern]) -> f64 {
    if patterns.is_empty() {
        return f64::INFINITY;
    }
    stability_margins(params, patterns)
        .map(|r| r.min_raw())
        .unwrap_or(f64::NAN)
}

/// Initializes parameters from `seed` and trains them on `patterns`.
pub fn train(spec: &RuleSpec, patterns: &[Pattern], n: usize, seed: u64) -> Result<(NetworkParams, TrainReport)> {
    let init = init_params(n, spec.sc, spec.init_std, seed)?;
    train_from(spec, init, patterns)
}

/// Trains starting from the given parameters. The self-coupling flag of
/// `spec` wins over the one carried by `params`.
pub fn train_from(
    spec: &RuleSpec,
    params: NetworkParams,
    patterns: &[Pattern],
) -> Result<(NetworkParams, TrainReport)> {
    spec.validate()?;
    let n = params.n();
    check_patterns(n, patterns)?;
    let mut params = NetworkParams::from_parts(params.weights().clone(), params.biases().clone(), spec.sc)?;

    let simple = |params: NetworkParams, sweeps: usize| {
        let min_margin = min_raw_margin(&params, patterns);
        let report = TrainReport {
            sweeps_used: sweeps,
            final_objective: None,
            converged: true,
            min_margin,
            si_fallbacks: 0,
        };
        (params, report)
    };

    match spec.kind {
        RuleKind::Hebbian => {
            hebbian_train(&mut params, patterns, spec.lambda)?;
            Ok(simple(params, 1))
        }
        RuleKind::Storkey => {
            storkey_train(&mut params, patterns, spec.lambda, spec.incremental)?;
            Ok(simple(params, 1))
        }
        RuleKind::PseudoInverse => {
            let params = pseudo_inverse_train(patterns, n, spec.sc)?;
            Ok(simple(params, 1))
        }
        RuleKind::KrauthMezard => krauth_mezard_train(params, patterns, spec.lr, spec.maxiter),
        RuleKind::GardnerKrauthMezard => {
            gardner_krauth_mezard_train(params, patterns, spec.lr, spec.margin_k, spec.maxiter)
        }
        RuleKind::DiederichOpperI => {
            // Rule I is the L1 descent rule; its table defaults are λ = 1, α = 0.
            let inner = RuleSpec {
                kind: RuleKind::DescentL1,
                ..spec.clone()
            };
            descent::train_descent(&inner, params, patterns)
        }
        RuleKind::DiederichOpperII => {
            // Rule II is the L2 descent rule without its factor 2.
            let inner = RuleSpec {
                kind: RuleKind::DescentL2,
                lr: spec.lr / 2.0,
                newton: false,
                ..spec.clone()
            };
            descent::train_descent(&inner, params, patterns)
        }
        RuleKind::DescentL1 | RuleKind::DescentL2 | RuleKind::DescentExpBarrier | RuleKind::DescentExpBarrierSi => {
            descent::train_descent(spec, params, patterns)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_names_round_trip() {
        for kind in RuleKind::ALL {
            assert_eq!(kind.name().parse::<RuleKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
            assert_eq!(serde_json::from_str::<RuleKind>(&json).unwrap(), kind);
        }
        assert_eq!("pseudo_inverse".parse::<RuleKind>().unwrap(), RuleKind::PseudoInverse);
        assert_eq!("Descent-L2".parse::<RuleKind>().unwrap(), RuleKind::DescentL2);
        let err = "nosuch".parse::<RuleKind>().unwrap_err().to_string();
        assert!(err.contains("gardner_krauth_mezard"));
    }

    #[test]
    fn defaults_follow_the_tables() {
        let d = RuleSpec::defaults(RuleKind::GardnerKrauthMezard, true);
        assert_eq!((d.lr, d.margin_k, d.maxiter, d.sc), (1e-2, 1.0, 100, true));
        let d = RuleSpec::defaults(RuleKind::KrauthMezard, false);
        assert_eq!((d.lr, d.maxiter, d.init_std), (1e-2, 200, 0.0));
        assert_eq!(RuleSpec::defaults(RuleKind::Hebbian, true).init_std, 0.01);
        let d = RuleSpec::defaults(RuleKind::DescentL2, true);
        assert_eq!((d.lambda, d.alpha, d.tol), (0.5, 1e-3, 0.1));
        let d = RuleSpec::defaults(RuleKind::DescentExpBarrier, false);
        assert_eq!((d.lambda, d.alpha, d.tol), (0.5, 1e-3, 1e-3));
        let d = RuleSpec::defaults(RuleKind::DescentExpBarrierSi, false);
        assert_eq!((d.lambda, d.alpha), (0.5, 0.0));
        let d = RuleSpec::defaults(RuleKind::DiederichOpperII, true);
        assert_eq!((d.lr, d.tol), (1e-2, 0.1));
        for kind in RuleKind::ALL {
            RuleSpec::defaults(kind, true).validate().unwrap();
            RuleSpec::defaults(kind, false).validate().unwrap();
        }
    }

    #[test]
    fn validate_rejects_bad_values() {
        let mut s = RuleSpec::defaults(RuleKind::DescentL2, false);
        s.lr = 0.0;
        assert!(s.validate().is_err());
        let mut s = RuleSpec::defaults(RuleKind::DescentL2, false);
        s.alpha = -1.0;
        assert!(s.validate().is_err());
        let mut s = RuleSpec::defaults(RuleKind::DescentL2, false);
        s.neumann_terms = Some(0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn init_params_examples() {
        let z = init_params(6, true, 0.0, 3).unwrap();
        assert_eq!(z, NetworkParams::zeros(6, true));
        let a = init_params(6, false, 0.5, 3).unwrap();
        assert!((0..6).all(|i| a.weight(i, i) == 0.0));
        assert!(a.is_symmetric(0.0));
        assert_eq!(a, init_params(6, false, 0.5, 3).unwrap());
        assert_ne!(a, init_params(6, false, 0.5, 4).unwrap());
        assert!(init_params(0, false, 0.5, 3).is_err());
    }

    #[test]
    fn init_params_has_requested_spread() {
        let p = init_params(200, true, 0.25, 1).unwrap();
        let b = p.biases();
        let var = b.iter().map(|x| x * x).sum::<f64>() / b.len() as f64;
        assert!((var.sqrt() - 0.25).abs() < 0.04);
    }
}
