//! Descent-type rules: each neuron takes a step down one of the per-neuron
//! objectives below, with `m^μ = σ_i^μ h_i^μ` and `w = (ω_i, b_i)`.
//!
//! | rule             | objective                                  |
//! |------------------|--------------------------------------------|
//! | DescentL2        | `Σ_μ (λh^μ − σ_i^μ)² + (α/2)‖w‖²`           |
//! | DescentL1        | `Σ_μ |λh^μ − σ_i^μ| + (α/2)‖w‖²`            |
//! | DescentExpBarrier| `Σ_μ exp(−λ m^μ) + (α/2)‖w‖²`               |
//! | DescentExpBarrierSI | `Σ_μ exp(−λ m^μ / ‖w‖)`                  |
//!
//! Steps take a batch of patterns; a batch of one is the incremental form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::NetworkParams;
use crate::optim::{
    hessian_inverse_exact, hessian_inverse_neumann, hessian_inverse_rank_one, newton_step, AugmentedWeights,
    HessianInverse, PatternMatrix,
};
use crate::pattern::Pattern;

use super::{check_patterns, min_raw_margin, RuleKind, RuleSpec, TrainReport};

/// Barrier exponents are clamped to this value before `exp`.
pub const EXPONENT_CLAMP: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    L2,
    L1,
    ExpBarrier,
    ExpBarrierSi,
}

impl Objective {
    pub fn of(kind: RuleKind) -> Option<Objective> {
        match kind {
            RuleKind::DescentL2 | RuleKind::DiederichOpperII => Some(Objective::L2),
            RuleKind::DescentL1 | RuleKind::DiederichOpperI => Some(Objective::L1),
            RuleKind::DescentExpBarrier => Some(Objective::ExpBarrier),
            RuleKind::DescentExpBarrierSi => Some(Objective::ExpBarrierSi),
            _ => None,
        }
    }
}

fn barrier(exponent: f64) -> f64 {
    exponent.min(EXPONENT_CLAMP).exp()
}

/// `p × N` matrix of spins, one pattern per row.
fn spin_rows(n: usize, patterns: &[Pattern]) -> DMatrix<f64> {
    DMatrix::from_fn(patterns.len(), n, |mu, j| patterns[mu].get(j))
}

/// `h[(μ, i)] = Σ_j ω_ij σ_j^μ + b_i`.
fn fields(params: &NetworkParams, spins: &DMatrix<f64>) -> DMatrix<f64> {
    let mut h = spins * params.weights().transpose();
    for mut row in h.row_iter_mut() {
        row += params.biases().transpose();
    }
    h
}

/// Applies `Δω_ij = lr (Σ_μ c_μi σ_j^μ − d_i ω_ij)`, `Δb_i = lr (Σ_μ c_μi − d_i b_i)`
/// and returns the max-norm of the applied change.
fn apply(params: &mut NetworkParams, spins: &DMatrix<f64>, coef: &DMatrix<f64>, decay: &DVector<f64>, lr: f64) -> f64 {
    let n = params.n();
    let mut dw = coef.transpose() * spins;
    let mut db = DVector::from_fn(n, |i, _| coef.column(i).sum());
    for i in 0..n {
        let d = decay[i];
        if d != 0.0 {
            for j in 0..n {
                dw[(i, j)] -= d * params.weight(i, j);
            }
            db[i] -= d * params.bias(i);
        }
    }
    dw *= lr;
    db *= lr;
    if !params.self_coupling() {
        dw.fill_diagonal(0.0);
    }
    let change = dw.amax().max(db.amax());
    *params.weights_mut() += dw;
    *params.biases_mut() += db;
    params.mask_diagonal();
    change
}

fn prepare(params: &NetworkParams, patterns: &[Pattern]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if patterns.is_empty() {
        return Err(Error::invalid("descent step needs at least one pattern"));
    }
    check_patterns(params.n(), patterns)?;
    let spins = spin_rows(params.n(), patterns);
    let h = fields(params, &spins);
    Ok((spins, h))
}

/// `Δω_ij = lr [Σ_μ 2λ(σ_i − λh_i)σ_j − αω_ij]`. Returns the max-norm of the update.
pub fn descent_l2_step(params: &mut NetworkParams, patterns: &[Pattern], lambda: f64, alpha: f64, lr: f64) -> Result<f64> {
    let (spins, h) = prepare(params, patterns)?;
    let coef = spins.zip_map(&h, |s, hv| 2.0 * lambda * (s - lambda * hv));
    let decay = DVector::from_element(params.n(), alpha);
    Ok(apply(params, &spins, &coef, &decay, lr))
}

/// `Δω_ij = lr [Σ_μ λ sign(σ_i − λh_i) σ_j − αω_ij]` with `sign(0) = 0`.
pub fn descent_l1_step(params: &mut NetworkParams, patterns: &[Pattern], lambda: f64, alpha: f64, lr: f64) -> Result<f64> {
    let (spins, h) = prepare(params, patterns)?;
    let coef = spins.zip_map(&h, |s, hv| {
        let r = s - lambda * hv;
        if r > 0.0 {
            lambda
        } else if r < 0.0 {
            -lambda
        } else {
            0.0
        }
    });
    let decay = DVector::from_element(params.n(), alpha);
    Ok(apply(params, &spins, &coef, &decay, lr))
}

/// `Δω_ij = lr [λ Σ_μ σ_i σ_j exp(−λσ_i h_i) − αω_ij]`.
pub fn exp_barrier_step(params: &mut NetworkParams, patterns: &[Pattern], lambda: f64, alpha: f64, lr: f64) -> Result<f64> {
    let (spins, h) = prepare(params, patterns)?;
    let coef = spins.zip_map(&h, |s, hv| lambda * s * barrier(-lambda * s * hv));
    let decay = DVector::from_element(params.n(), alpha);
    Ok(apply(params, &spins, &coef, &decay, lr))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiStep {
    pub max_update: f64,
    /// Neurons with a zero augmented weight vector, updated with the plain
    /// barrier step instead.
    pub fallbacks: usize,
}

/// Negative gradient step on `Σ_μ exp(−λ m^μ / ‖w‖)`.
///
/// With `ν = ‖w‖` and `e_μ` the barrier term, the step is
/// `lr λ [Σ_μ e_μ σ_i^μ σ'^μ / ν − (Σ_μ e_μ m^μ) w / ν³]`, which is
/// orthogonal to `w`.
pub fn exp_barrier_si_step(params: &mut NetworkParams, patterns: &[Pattern], lambda: f64, lr: f64) -> Result<SiStep> {
    let (spins, h) = prepare(params, patterns)?;
    let n = params.n();
    let p = patterns.len();
    let mut coef = DMatrix::zeros(p, n);
    let mut decay = DVector::zeros(n);
    let mut fallbacks = 0;
    for i in 0..n {
        let norm = params.augmented_norm(i);
        if norm == 0.0 {
            fallbacks += 1;
            for mu in 0..p {
                let s = spins[(mu, i)];
                coef[(mu, i)] = lambda * s * barrier(-lambda * s * h[(mu, i)]);
            }
            continue;
        }
        let mut weighted_margin = 0.0;
        for mu in 0..p {
            let s = spins[(mu, i)];
            let m = s * h[(mu, i)];
            let e = barrier(-lambda * m / norm);
            coef[(mu, i)] = lambda * e * s / norm;
            weighted_margin += e * m;
        }
        decay[i] = lambda * weighted_margin / norm.powi(3);
    }
    let max_update = apply(params, &spins, &coef, &decay, lr);
    Ok(SiStep { max_update, fallbacks })
}

/// The objective neuron `i` descends, evaluated at the current parameters.
pub fn neuron_objective(
    objective: Objective,
    params: &NetworkParams,
    patterns: &[Pattern],
    i: usize,
    lambda: f64,
    alpha: f64,
) -> Result<f64> {
    check_patterns(params.n(), patterns)?;
    let norm = params.augmented_norm(i);
    let reg = 0.5 * alpha * norm * norm;
    let terms = patterns.iter().map(|p| {
        let s = p.get(i);
        let h = params.field(p, i);
        match objective {
            Objective::L2 => (lambda * h - s).powi(2),
            Objective::L1 => (lambda * h - s).abs(),
            Objective::ExpBarrier => barrier(-lambda * s * h),
            Objective::ExpBarrierSi if norm == 0.0 => 1.0,
            Objective::ExpBarrierSi => barrier(-lambda * s * h / norm),
        }
    });
    let sum: f64 = terms.sum();
    Ok(match objective {
        Objective::ExpBarrierSi => sum,
        _ => sum + reg,
    })
}

fn total_objective(objective: Objective, params: &NetworkParams, patterns: &[Pattern], lambda: f64, alpha: f64) -> Option<f64> {
    if patterns.is_empty() {
        return None;
    }
    (0..params.n())
        .map(|i| neuron_objective(objective, params, patterns, i, lambda, alpha))
        .sum::<Result<f64>>()
        .ok()
}

/// Per-neuron Hessian inverses for the batch L2 problem. Without
/// self-coupling each neuron's design matrix drops its own input.
fn batch_inverses(
    params: &NetworkParams,
    z: &PatternMatrix,
    lambda: f64,
    alpha: f64,
    neumann_terms: Option<usize>,
) -> Result<Vec<HessianInverse>> {
    let invert = |zi: &PatternMatrix| match neumann_terms {
        Some(terms) => hessian_inverse_neumann(zi, lambda, alpha, terms),
        None => hessian_inverse_exact(zi, lambda, alpha),
    };
    if params.self_coupling() {
        let shared = invert(z)?;
        Ok(vec![shared; params.n()])
    } else {
        (0..params.n()).map(|i| invert(&z.without_input(i))).collect()
    }
}

fn newton_sweep(
    params: &mut NetworkParams,
    designs: &[PatternMatrix],
    targets: &[DVector<f64>],
    inverses: &[HessianInverse],
    lambda: f64,
    alpha: f64,
) -> Result<f64> {
    let mut change: f64 = 0.0;
    for i in 0..params.n() {
        let w = AugmentedWeights(params.augmented_row(i));
        let next = newton_step(&w, &designs[i], &targets[i], lambda, alpha, &inverses[i])?;
        change = change.max((&next.0 - &w.0).amax());
        params.set_augmented_row(i, &next.0);
    }
    Ok(change)
}

/// Newton iterations on the batch L2 objective until the update max-norm
/// drops below `tol`. Returns `(iterations, converged)`.
pub fn newton_l2_batch(
    params: &mut NetworkParams,
    patterns: &[Pattern],
    lambda: f64,
    alpha: f64,
    neumann_terms: Option<usize>,
    tol: f64,
    maxiter: usize,
) -> Result<(usize, bool)> {
    if patterns.is_empty() {
        return Ok((0, true));
    }
    let n = params.n();
    let z = PatternMatrix::new(n, patterns)?;
    let inverses = batch_inverses(params, &z, lambda, alpha, neumann_terms)?;
    let designs: Vec<_> = (0..n)
        .map(|i| if params.self_coupling() { z.clone() } else { z.without_input(i) })
        .collect();
    let targets: Vec<_> = (0..n).map(|i| z.targets(i)).collect();
    for it in 1..=maxiter {
        let change = newton_sweep(params, &designs, &targets, &inverses, lambda, alpha)?;
        if !change.is_finite() {
            return Err(Error::Divergence("Newton update is not finite".into()));
        }
        if change < tol {
            return Ok((it, true));
        }
    }
    Ok((maxiter, false))
}

/// Newton steps with the exact rank-one inverse, one pattern at a time.
/// Each pattern is iterated until the update drops below `tol`.
/// Returns `(total steps, every pattern converged)`.
pub fn newton_l2_incremental(
    params: &mut NetworkParams,
    patterns: &[Pattern],
    lambda: f64,
    alpha: f64,
    tol: f64,
    maxiter: usize,
) -> Result<(usize, bool)> {
    let n = params.n();
    check_patterns(n, patterns)?;
    let mut steps = 0;
    let mut all_converged = true;
    for pattern in patterns {
        let z = PatternMatrix::new(n, std::slice::from_ref(pattern))?;
        let mut designs = Vec::with_capacity(n);
        let mut inverses = Vec::with_capacity(n);
        for i in 0..n {
            let zi = if params.self_coupling() { z.clone() } else { z.without_input(i) };
            inverses.push(hessian_inverse_rank_one(&zi.columns().column(0).into_owned(), lambda, alpha)?);
            designs.push(zi);
        }
        let targets: Vec<_> = (0..n).map(|i| z.targets(i)).collect();
        let mut converged = false;
        for _ in 0..maxiter {
            steps += 1;
            let change = newton_sweep(params, &designs, &targets, &inverses, lambda, alpha)?;
            if change < tol {
                converged = true;
                break;
            }
        }
        all_converged &= converged;
    }
    Ok((steps, all_converged))
}

fn first_order_step(spec: &RuleSpec, params: &mut NetworkParams, batch: &[Pattern], fallbacks: &mut usize) -> Result<f64> {
    match spec.kind {
        RuleKind::DescentL2 => descent_l2_step(params, batch, spec.lambda, spec.alpha, spec.lr),
        RuleKind::DescentL1 => descent_l1_step(params, batch, spec.lambda, spec.alpha, spec.lr),
        RuleKind::DescentExpBarrier => exp_barrier_step(params, batch, spec.lambda, spec.alpha, spec.lr),
        RuleKind::DescentExpBarrierSi => {
            let step = exp_barrier_si_step(params, batch, spec.lambda, spec.lr)?;
            *fallbacks += step.fallbacks;
            Ok(step.max_update)
        }
        other => Err(Error::invalid(format!("{other} is not a descent rule"))),
    }
}

/// Runs a descent rule to its `tol`/`maxiter` criterion.
///
/// Non-incremental: full-batch steps. Incremental: epochs that present the
/// patterns one at a time in order; the epoch's largest update is compared
/// against `tol`.
pub(crate) fn train_descent(
    spec: &RuleSpec,
    mut params: NetworkParams,
    patterns: &[Pattern],
) -> Result<(NetworkParams, TrainReport)> {
    let objective = Objective::of(spec.kind).ok_or_else(|| Error::invalid(format!("{} is not a descent rule", spec.kind)))?;
    let mut fallbacks = 0;
    let (sweeps, converged) = if patterns.is_empty() {
        (0, true)
    } else if spec.kind == RuleKind::DescentL2 && spec.newton {
        if spec.incremental {
            newton_l2_incremental(&mut params, patterns, spec.lambda, spec.alpha, spec.tol, spec.maxiter)?
        } else {
            newton_l2_batch(
                &mut params,
                patterns,
                spec.lambda,
                spec.alpha,
                spec.neumann_terms,
                spec.tol,
                spec.maxiter,
            )?
        }
    } else {
        let mut outcome = (spec.maxiter, false);
        for it in 1..=spec.maxiter {
            let change = if spec.incremental {
                let mut largest: f64 = 0.0;
                for p in patterns {
                    largest = largest.max(first_order_step(spec, &mut params, std::slice::from_ref(p), &mut fallbacks)?);
                }
                largest
            } else {
                first_order_step(spec, &mut params, patterns, &mut fallbacks)?
            };
            if !change.is_finite() || !params.is_finite() {
                return Err(Error::Divergence(format!("{} produced non-finite weights", spec.kind)));
            }
            if change < spec.tol {
                outcome = (it, true);
                break;
            }
        }
        outcome
    };
    let report = TrainReport {
        sweeps_used: sweeps,
        final_objective: total_objective(objective, &params, patterns, spec.lambda, spec.alpha),
        converged,
        min_margin: min_raw_margin(&params, patterns),
        si_fallbacks: fallbacks,
    };
    Ok((params, report))
}
