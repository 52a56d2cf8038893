//! Recall-capacity experiments: sample patterns, train, distort one stored
//! pattern, let the network settle and record the overlap with the original.
//! Sweeping the load `p` and the distortion `k` yields a grid of mean
//! overlaps; thresholding it at `ε` gives the capacity curve `p_ε(k)`.

mod config;
mod curve;
mod persist;
mod run;
pub mod seed;

pub use config::{ExperimentConfig, IntRange, ProbeSelection, DEFAULT_EPSILON, DEFAULT_MAX_SWEEPS};
pub use curve::{curve_area, extract_curve, CurveResult};
pub use persist::{
    load, load_curve_csv, load_grid, persist, persist_curve, persist_grid, Format, Persisted, CURVE_HEADER, GRID_HEADER,
};
pub use run::{run_grid, run_grid_with, run_trial, Execution, GridResult, TrialRecord};
pub use seed::sample_patterns;
