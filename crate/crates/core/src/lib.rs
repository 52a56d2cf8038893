//! Discrete Hopfield networks: dynamics, learning rules, Newton-accelerated
//! quadratic training and a capacity-benchmark harness.

pub mod error;
pub mod harness;
pub mod network;
pub mod optim;
pub mod pattern;
pub mod rules;

pub use error::{Error, Result};
pub use network::{
    energy, evolve, evolve_with_order, net_input, stability_margins, EvolutionOutcome, NetworkParams, StabilityReport,
    SweepOrder, Terminal, UpdateMode,
};
pub use pattern::{overlap, Pattern};
pub use rules::{train, train_from, RuleKind, RuleSpec, TrainReport};
