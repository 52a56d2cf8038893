use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{evolve, NetworkParams, Terminal};
use crate::pattern::{overlap, Pattern};
use crate::rules::{init_params, train_from, RuleKind};

use super::config::ExperimentConfig;
use super::config::ProbeSelection;
use super::seed::{init_seed, probe_index, sample_patterns, training_seed, trial_seed};

/// Outcome of presenting one distorted pattern to one trained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub p: usize,
    pub k_flips: usize,
    pub trial_index: usize,
    pub seed: u64,
    /// Overlap of the final state with the undistorted pattern.
    pub overlap: f64,
    pub iterations: usize,
    /// Training raised no error and the dynamics reached a fixed point.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub rule: RuleKind,
    pub n: usize,
    pub p_values: Vec<usize>,
    pub k_values: Vec<usize>,
    /// `mean_overlap[pi][ki]` averages the trials at `(p_values[pi], k_values[ki])`.
    pub mean_overlap: Vec<Vec<f64>>,
    /// Sorted by `(p, k, trial_index)`.
    pub records: Vec<TrialRecord>,
}

impl GridResult {
    /// Builds the grid from records, sorting them and averaging each cell
    /// in trial order.
    pub fn from_records(rule: RuleKind, n: usize, mut records: Vec<TrialRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("grid has no records"));
        }
        records.sort_by_key(|r| (r.p, r.k_flips, r.trial_index));
        let mut p_values: Vec<usize> = records.iter().map(|r| r.p).collect();
        p_values.dedup();
        let mut k_values: Vec<usize> = records.iter().map(|r| r.k_flips).collect();
        k_values.sort_unstable();
        k_values.dedup();
        let mut sums = vec![vec![(0.0, 0usize); k_values.len()]; p_values.len()];
        for r in &records {
            let pi = p_values.binary_search(&r.p).unwrap_or_default();
            let ki = k_values.binary_search(&r.k_flips).unwrap_or_default();
            sums[pi][ki].0 += r.overlap;
            sums[pi][ki].1 += 1;
        }
        let mut mean_overlap = Vec::with_capacity(p_values.len());
        for (row, &p) in sums.iter().zip(&p_values) {
            let mut means = Vec::with_capacity(row.len());
            for (&(sum, count), &k) in row.iter().zip(&k_values) {
                if count == 0 {
                    return Err(Error::invalid(format!("grid cell p = {p}, k = {k} has no trials")));
                }
                means.push(sum / count as f64);
            }
            mean_overlap.push(means);
        }
        Ok(GridResult {
            rule,
            n,
            p_values,
            k_values,
            mean_overlap,
            records,
        })
    }

    pub fn mean(&self, p: usize, k: usize) -> Option<f64> {
        let pi = self.p_values.iter().position(|&v| v == p)?;
        let ki = self.k_values.iter().position(|&v| v == k)?;
        Some(self.mean_overlap[pi][ki])
    }
}

/// How `run_grid_with` schedules the independent `(p, trial)` cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// A dedicated pool of `workers` threads; 0 picks the machine's
    /// parallelism. Runs sequentially when built without `parallel`.
    Parallel { workers: usize },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { workers: 0 }
        } else {
            Execution::Sequential
        }
    }
}

/// A network trained on the patterns of cell `(p, trial)`.
struct TrainedCell {
    patterns: Vec<Pattern>,
    probe: usize,
    params: NetworkParams,
    failed: bool,
}

fn train_cell(config: &ExperimentConfig, p: usize, trial: usize) -> Result<TrainedCell> {
    let seed = training_seed(config.master_seed, p, trial);
    let patterns = sample_patterns(config.n, p, seed)?;
    let init = init_params(config.n, config.rule.sc, config.init_std, init_seed(seed))?;
    let probe = match config.probe {
        ProbeSelection::First => 0,
        ProbeSelection::Uniform => probe_index(seed, p),
    };
    Ok(match train_from(&config.rule, init.clone(), &patterns) {
        Ok((params, _)) if params.is_finite() => TrainedCell {
            patterns,
            probe,
            params,
            failed: false,
        },
        _ => TrainedCell {
            patterns,
            probe,
            params: init,
            failed: true,
        },
    })
}

fn retrieve(config: &ExperimentConfig, cell: &TrainedCell, p: usize, k: usize, trial: usize) -> Result<TrialRecord> {
    let seed = trial_seed(config.master_seed, p, k, trial);
    let target = &cell.patterns[cell.probe];
    let probe = target.distort(k, seed)?;
    let outcome = evolve(&cell.params, &probe, config.update_mode, config.max_sweeps)?;
    Ok(TrialRecord {
        p,
        k_flips: k,
        trial_index: trial,
        seed,
        overlap: overlap(&outcome.final_state, target)?,
        iterations: outcome.iterations,
        converged: !cell.failed && outcome.terminal == Terminal::FixedPoint,
    })
}

/// One retrieval: sample `p` patterns, train from fresh weights, distort one
/// stored pattern with `k` flips and let the network settle.
///
/// A rule that errors or produces non-finite weights is recorded as
/// `converged = false`, evolving under the untrained weights.
pub fn run_trial(config: &ExperimentConfig, p: usize, k: usize, trial_index: usize) -> Result<TrialRecord> {
    config.validate()?;
    if !config.p_range.contains(p) || !config.k_range.contains(k) || trial_index >= config.trials {
        return Err(Error::invalid(format!(
            "trial (p = {p}, k = {k}, t = {trial_index}) lies outside the configured grid"
        )));
    }
    let cell = train_cell(config, p, trial_index)?;
    retrieve(config, &cell, p, k, trial_index)
}

fn run_cell(config: &ExperimentConfig, ks: &[usize], p: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let cell = train_cell(config, p, trial)?;
    ks.iter().map(|&k| retrieve(config, &cell, p, k, trial)).collect()
}

pub fn run_grid(config: &ExperimentConfig) -> Result<GridResult> {
    run_grid_with(config, Execution::default())
}

/// Every `(p, k, trial)` of the configuration. Each `(p, trial)` network is
/// trained once and probed at every `k`; results do not depend on the
/// execution strategy.
pub fn run_grid_with(config: &ExperimentConfig, execution: Execution) -> Result<GridResult> {
    config.validate()?;
    let ks = config.k_range.values();
    let cells: Vec<(usize, usize)> = config
        .p_range
        .values()
        .into_iter()
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let job = |&(p, t): &(usize, usize)| run_cell(config, &ks, p, t);
    let chunks: Vec<Result<Vec<TrialRecord>>> = match execution {
        Execution::Sequential => cells.iter().map(job).collect(),
        Execution::Parallel { workers } => parallel_map(&cells, workers, job)?,
    };
    let mut records = Vec::with_capacity(cells.len() * ks.len());
    for chunk in chunks {
        records.extend(chunk?);
    }
    GridResult::from_records(config.rule.kind, config.n, records)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _workers: usize, f: F) -> Result<Vec<R>>
where
    F: Fn(&T) -> R,
{
    Ok(items.iter().map(f).collect())
}
