//! Network parameters and the retrieval dynamics: net input, sign activation,
//! synchronous and asynchronous evolution, energy, and stability margins.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;

/// Weights, biases, and the self-coupling switch of an N-neuron network.
///
/// Row `i` of `weights` holds the weights afferent to neuron `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct NetworkParams {
    weights: DMatrix<f64>,
    biases: DVector<f64>,
    self_coupling: bool,
}

impl NetworkParams {
    pub fn zeros(n: usize, self_coupling: bool) -> Self {
        NetworkParams {
            weights: DMatrix::zeros(n, n),
            biases: DVector::zeros(n),
            self_coupling,
        }
    }

    /// Validates shapes and finiteness. The diagonal is zeroed when
    /// `self_coupling` is false.
    pub fn from_parts(
        weights: DMatrix<f64>,
        biases: DVector<f64>,
        self_coupling: bool,
    ) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::invalid(format!(
                "weight matrix must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if weights.nrows() == 0 {
            return Err(Error::invalid("network must have at least one neuron"));
        }
        Error::check_len(weights.nrows(), biases.len())?;
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("network parameters must be finite"));
        }
        let mut params = NetworkParams {
            weights,
            biases,
            self_coupling,
        };
        params.mask_diagonal();
        Ok(params)
    }

    pub fn n(&self) -> usize {
        self.biases.len()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &DVector<f64> {
        &self.biases
    }

    pub fn self_coupling(&self) -> bool {
        self.self_coupling
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub(crate) fn weights_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut DVector<f64> {
        &mut self.biases
    }

    /// Zeroes the diagonal unless self-coupling is enabled.
    pub(crate) fn mask_diagonal(&mut self) {
        if !self.self_coupling {
            self.weights.fill_diagonal(0.0);
        }
    }

    /// `(ω_i, b_i)` as one length-(N+1) vector.
    pub fn augmented_row(&self, i: usize) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(n + 1, |j, _| if j < n { self.weights[(i, j)] } else { self.biases[i] })
    }

    pub(crate) fn set_augmented_row(&mut self, i: usize, row: &DVector<f64>) {
        let n = self.n();
        debug_assert_eq!(row.len(), n + 1);
        for j in 0..n {
            self.weights[(i, j)] = row[j];
        }
        self.biases[i] = row[n];
        if !self.self_coupling {
            self.weights[(i, i)] = 0.0;
        }
    }

    pub fn augmented_norm(&self, i: usize) -> f64 {
        let w2: f64 = self.weights.row(i).iter().map(|w| w * w).sum();
        (w2 + self.biases[i] * self.biases[i]).sqrt()
    }

    /// Multiplies row `i` and bias `i` by `factor`.
    pub fn scale_neuron(&mut self, i: usize, factor: f64) {
        self.weights.row_mut(i).scale_mut(factor);
        self.biases[i] *= factor;
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.biases.iter()).all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (&self.weights - self.weights.transpose()).amax() <= tol
    }

    pub(crate) fn field(&self, state: &Pattern, i: usize) -> f64 {
        let mut h = self.biases[i];
        for (j, &s) in state.spins().iter().enumerate() {
            h += self.weights[(i, j)] * f64::from(s);
        }
        h
    }

    fn check_state(&self, state: &Pattern) -> Result<()> {
        Error::check_len(self.n(), state.len())
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    n: usize,
    self_coupling: bool,
    /// Row-major.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl From<NetworkParams> for ParamsRepr {
    fn from(p: NetworkParams) -> Self {
        let n = p.n();
        ParamsRepr {
            n,
            self_coupling: p.self_coupling,
            weights: p.weights.transpose().as_slice().to_vec(),
            biases: p.biases.as_slice().to_vec(),
        }
    }
}

impl TryFrom<ParamsRepr> for NetworkParams {
    type Error = Error;

    fn try_from(r: ParamsRepr) -> Result<Self> {
        if r.weights.len() != r.n * r.n {
            return Err(Error::DimensionMismatch {
                expected: r.n * r.n,
                found: r.weights.len(),
            });
        }
        let weights = DMatrix::from_row_slice(r.n, r.n, &r.weights);
        let params = NetworkParams::from_parts(weights, DVector::from_vec(r.biases), r.self_coupling)?;
        Ok(params)
    }
}

/// The local fields `h_i = Σ_j ω_ij s_j + b_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetInput(pub Vec<f64>);

impl NetInput {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn net_input(params: &NetworkParams, state: &Pattern) -> Result<NetInput> {
    params.check_state(state)?;
    Ok(NetInput((0..params.n()).map(|i| params.field(state, i)).collect()))
}

fn sign_or_hold(h: f64, previous: i8) -> i8 {
    if h > 0.0 {
        1
    } else if h < 0.0 {
        -1
    } else {
        previous
    }
}

/// Elementwise sign; a zero field keeps the previous spin.
pub fn activate(h: &NetInput, previous: &Pattern) -> Result<Pattern> {
    Error::check_len(previous.len(), h.0.len())?;
    let spins = h
        .0
        .iter()
        .zip(previous.spins())
        .map(|(&v, &s)| sign_or_hold(v, s))
        .collect();
    Pattern::new(spins)
}

/// Recomputes neuron `i` in place. Returns whether its spin changed.
pub fn update_neuron(params: &NetworkParams, state: &mut Pattern, i: usize) -> Result<bool> {
    params.check_state(state)?;
    if i >= params.n() {
        return Err(Error::invalid(format!("neuron {i} out of range")));
    }
    let old = state.spins()[i];
    let new = sign_or_hold(params.field(state, i), old);
    state.set(i, new);
    Ok(new != old)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    Synchronous,
    Asynchronous,
}

/// Neuron visiting order inside an asynchronous sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    Cyclic,
    /// A fresh permutation per sweep, drawn from a generator seeded once.
    Shuffled(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    FixedPoint,
    TwoCycle,
    MaxIters,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionOutcome {
    pub final_state: Pattern,
    /// Full sweeps performed, including the one that confirmed termination.
    pub iterations: usize,
    pub terminal: Terminal,
}

pub fn evolve(
    params: &NetworkParams,
    initial: &Pattern,
    mode: UpdateMode,
    max_sweeps: usize,
) -> Result<EvolutionOutcome> {
    evolve_with_order(params, initial, mode, max_sweeps, SweepOrder::Cyclic)
}

pub fn evolve_with_order(
    params: &NetworkParams,
    initial: &Pattern,
    mode: UpdateMode,
    max_sweeps: usize,
    order: SweepOrder,
) -> Result<EvolutionOutcome> {
    params.check_state(initial)?;
    if max_sweeps == 0 {
        return Err(Error::invalid("max_sweeps must be at least 1"));
    }
    match mode {
        UpdateMode::Asynchronous => Ok(evolve_async(params, initial.clone(), max_sweeps, order)),
        UpdateMode::Synchronous => evolve_sync(params, initial.clone(), max_sweeps),
    }
}

fn evolve_async(
    params: &NetworkParams,
    mut state: Pattern,
    max_sweeps: usize,
    order: SweepOrder,
) -> EvolutionOutcome {
    let n = params.n();
    let mut visit: Vec<usize> = (0..n).collect();
    let mut rng = match order {
        SweepOrder::Cyclic => None,
        SweepOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    for sweep in 1..=max_sweeps {
        if let Some(rng) = rng.as_mut() {
            visit.shuffle(rng);
        }
        let mut changed = false;
        for &i in &visit {
            let old = state.spins()[i];
            let new = sign_or_hold(params.field(&state, i), old);
            if new != old {
                state.set(i, new);
                changed = true;
            }
        }
        if !changed {
            return EvolutionOutcome {
                final_state: state,
                iterations: sweep,
                terminal: Terminal::FixedPoint,
            };
        }
    }
    EvolutionOutcome {
        final_state: state,
        iterations: max_sweeps,
        terminal: Terminal::MaxIters,
    }
}

fn evolve_sync(params: &NetworkParams, mut state: Pattern, max_sweeps: usize) -> Result<EvolutionOutcome> {
    let mut two_back: Option<Pattern> = None;
    for sweep in 1..=max_sweeps {
        let next = activate(&net_input(params, &state)?, &state)?;
        if next == state {
            return Ok(EvolutionOutcome {
                final_state: next,
                iterations: sweep,
                terminal: Terminal::FixedPoint,
            });
        }
        if two_back.as_ref() == Some(&next) {
            return Ok(EvolutionOutcome {
                final_state: next,
                iterations: sweep,
                terminal: Terminal::TwoCycle,
            });
        }
        two_back = Some(std::mem::replace(&mut state, next));
    }
    Ok(EvolutionOutcome {
        final_state: state,
        iterations: max_sweeps,
        terminal: Terminal::MaxIters,
    })
}

/// `E = -½ sᵀWs - (b, s)`.
pub fn energy(params: &NetworkParams, state: &Pattern) -> Result<f64> {
    params.check_state(state)?;
    let s = state.to_vector();
    Ok(-0.5 * s.dot(&(params.weights() * &s)) - params.biases().dot(&s))
}

/// Per-pattern, per-neuron alignment of the local field with the clamped pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    /// Entry `(μ, i)` is `σ_i^μ h_i^μ`.
    pub raw: DMatrix<f64>,
    /// `raw` divided by `‖(ω_i, b_i)‖₂`; `None` where that norm is zero.
    pub normalized: DMatrix<Option<f64>>,
}

impl StabilityReport {
    pub fn min_raw(&self) -> f64 {
        self.raw.min()
    }

    /// Smallest defined normalized margin, if any is defined.
    pub fn min_normalized(&self) -> Option<f64> {
        self.normalized.iter().flatten().copied().reduce(f64::min)
    }

    /// Whether pattern `mu` survives one sweep unchanged.
    pub fn is_fixed_point(&self, mu: usize) -> bool {
        self.raw.row(mu).iter().all(|&m| m >= 0.0)
    }
}

pub fn stability_margins(params: &NetworkParams, patterns: &[Pattern]) -> Result<StabilityReport> {
    if patterns.is_empty() {
        return Err(Error::invalid("stability margins need at least one pattern"));
    }
    let n = params.n();
    for p in patterns {
        params.check_state(p)?;
    }
    let norms: Vec<f64> = (0..n).map(|i| params.augmented_norm(i)).collect();
    let raw = DMatrix::from_fn(patterns.len(), n, |mu, i| {
        patterns[mu].get(i) * params.field(&patterns[mu], i)
    });
    let normalized = DMatrix::from_fn(patterns.len(), n, |mu, i| {
        (norms[i] > 0.0).then(|| raw[(mu, i)] / norms[i])
    });
    Ok(StabilityReport { raw, normalized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn pat(v: &[i8]) -> Pattern {
        Pattern::new(v.to_vec()).unwrap()
    }

    fn params(w: &[f64], b: &[f64], sc: bool) -> NetworkParams {
        let n = b.len();
        NetworkParams::from_parts(DMatrix::from_row_slice(n, n, w), DVector::from_row_slice(b), sc).unwrap()
    }

    #[test]
    fn net_input_examples() {
        let zero = NetworkParams::zeros(3, true);
        assert_eq!(net_input(&zero, &pat(&[1, -1, 1])).unwrap().0, vec![0.0; 3]);

        let ident = NetworkParams::from_parts(DMatrix::identity(3, 3), DVector::zeros(3), true).unwrap();
        assert_eq!(net_input(&ident, &pat(&[1, -1, 1])).unwrap().0, vec![1.0, -1.0, 1.0]);

        let p = params(&[0.0, 1.0, 1.0, 0.0], &[0.5, -0.5], false);
        assert_eq!(net_input(&p, &pat(&[1, -1])).unwrap().0, vec![-0.5, 0.5]);
        assert!(matches!(
            net_input(&p, &pat(&[1, 1, 1])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn activate_examples() {
        let h = NetInput(vec![2.0, -0.1]);
        assert_eq!(activate(&h, &pat(&[-1, -1])).unwrap(), pat(&[1, -1]));
        let h = NetInput(vec![0.0, 0.0]);
        assert_eq!(activate(&h, &pat(&[1, -1])).unwrap(), pat(&[1, -1]));
        let s = pat(&[1, -1, -1, 1]);
        let h = NetInput(s.spins().iter().map(|&x| f64::from(x)).collect());
        assert_eq!(activate(&h, &pat(&[-1, -1, 1, 1])).unwrap(), s);
    }

    #[test]
    fn zero_network_rests_in_both_modes() {
        let zero = NetworkParams::zeros(5, false);
        let init = pat(&[1, -1, -1, 1, 1]);
        for mode in [UpdateMode::Synchronous, UpdateMode::Asynchronous] {
            let out = evolve(&zero, &init, mode, 10).unwrap();
            assert_eq!(out.terminal, Terminal::FixedPoint);
            assert!(out.iterations <= 1);
            assert_eq!(out.final_state, init);
        }
    }

    #[test]
    fn async_recovers_single_hebbian_pattern_from_both_orders() {
        // Hebbian weights for σ = [+1,-1] with λ = 1, no self-coupling.
        let p = params(&[0.0, -1.0, -1.0, 0.0], &[1.0, -1.0], false);
        let target = pat(&[1, -1]);
        for order in [SweepOrder::Cyclic, SweepOrder::Shuffled(0), SweepOrder::Shuffled(1)] {
            let out = evolve_with_order(&p, &pat(&[-1, -1]), UpdateMode::Asynchronous, 100, order).unwrap();
            assert_eq!(out.terminal, Terminal::FixedPoint);
            assert_eq!(out.final_state, target);
        }
        // Without the bias the cyclic order still lands on σ; visiting neuron 1
        // first would reach the anti-pattern instead.
        let p = params(&[0.0, -1.0, -1.0, 0.0], &[0.0, 0.0], false);
        let out = evolve(&p, &pat(&[-1, -1]), UpdateMode::Asynchronous, 100).unwrap();
        assert_eq!(out.final_state, target);
    }

    #[test]
    fn sync_detects_two_cycle() {
        let p = params(&[0.0, -1.0, -1.0, 0.0], &[0.0, 0.0], false);
        let out = evolve(&p, &pat(&[1, 1]), UpdateMode::Synchronous, 100).unwrap();
        assert_eq!(out.terminal, Terminal::TwoCycle);
        assert_eq!(out.iterations, 2);
        assert_eq!(out.final_state, pat(&[1, 1]));
    }

    #[test]
    fn evolve_rejects_bad_arguments() {
        let p = NetworkParams::zeros(2, false);
        assert!(evolve(&p, &pat(&[1, 1, 1]), UpdateMode::Asynchronous, 1).is_err());
        assert!(evolve(&p, &pat(&[1, 1]), UpdateMode::Asynchronous, 0).is_err());
    }

    #[test]
    fn energy_examples() {
        let s = pat(&[1, -1, 1]);
        assert_eq!(energy(&NetworkParams::zeros(3, true), &s).unwrap(), 0.0);
        let hebb = params(&[0.0, -1.0, -1.0, 0.0], &[0.0, 0.0], false);
        assert_eq!(energy(&hebb, &pat(&[1, -1])).unwrap(), -1.0);
        let biased = NetworkParams::from_parts(DMatrix::zeros(3, 3), s.to_vector(), true).unwrap();
        assert_eq!(energy(&biased, &s).unwrap(), -3.0);
    }

    #[test]
    fn margins_examples() {
        let s = pat(&[1, -1, 1, 1]);
        let zero = NetworkParams::zeros(4, true);
        let r = stability_margins(&zero, std::slice::from_ref(&s)).unwrap();
        assert!(r.raw.iter().all(|&m| m == 0.0));
        assert!(r.normalized.iter().all(Option::is_none));
        assert_eq!(r.min_normalized(), None);

        // σσᵀ/N is the projection onto a single pattern.
        let v = s.to_vector();
        let proj = NetworkParams::from_parts(&v * v.transpose() / 4.0, DVector::zeros(4), true).unwrap();
        let r = stability_margins(&proj, std::slice::from_ref(&s)).unwrap();
        assert!(r.raw.iter().all(|&m| (m - 1.0).abs() < 1e-15));
        assert!(r.is_fixed_point(0));

        assert!(stability_margins(&proj, &[]).is_err());
    }

    #[test]
    fn scaling_a_neuron_scales_raw_but_not_normalized_margins() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 6;
        let w = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let p = NetworkParams::from_parts(w, b, true).unwrap();
        let pats: Vec<_> = (0..3).map(|_| Pattern::random(n, &mut rng)).collect();
        let before = stability_margins(&p, &pats).unwrap();
        let mut scaled = p.clone();
        scaled.scale_neuron(2, 3.5);
        let after = stability_margins(&scaled, &pats).unwrap();
        for mu in 0..3 {
            for i in 0..n {
                let factor = if i == 2 { 3.5 } else { 1.0 };
                assert!((after.raw[(mu, i)] - factor * before.raw[(mu, i)]).abs() < 1e-12);
                let (a, b) = (after.normalized[(mu, i)].unwrap(), before.normalized[(mu, i)].unwrap());
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn params_json_is_row_major() {
        let p = params(&[0.0, 1.0, 2.0, 0.0], &[0.5, -0.5], false);
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(json["weights"], serde_json::json!([0.0, 1.0, 2.0, 0.0]));
        let back: NetworkParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, p);
    }

    fn random_net(n: usize, sc: bool, rng: &mut impl Rng) -> NetworkParams {
        let w = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
        NetworkParams::from_parts(w, b, sc).unwrap()
    }

    /// Every state of a small network: is it unchanged by one async sweep
    /// exactly when all of its margins are non-negative?
    #[test]
    fn fixed_points_match_non_negative_margins() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            for _ in 0..20 {
                let mut p = random_net(n, rng.random(), &mut rng);
                // Quantize so that exact-zero fields actually occur.
                p.weights_mut().apply(|w| *w = (*w * 2.0).round() / 2.0);
                p.biases_mut().apply(|b| *b = (*b * 2.0).round() / 2.0);
                p.mask_diagonal();
                for code in 0..(1u32 << n) {
                    let s = Pattern::new((0..n).map(|i| if code >> i & 1 == 1 { 1 } else { -1 }).collect()).unwrap();
                    let margins = stability_margins(&p, std::slice::from_ref(&s)).unwrap();
                    let out = evolve(&p, &s, UpdateMode::Asynchronous, 1).unwrap();
                    assert_eq!(out.final_state == s, margins.is_fixed_point(0), "n={n} state={s}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn positive_row_scaling_never_changes_activation(seed: u64, a in 0.01f64..100.0, i in 0usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_net(8, true, &mut rng);
            let mut scaled = p.clone();
            scaled.scale_neuron(i, a);
            let s = Pattern::random(8, &mut rng);
            let prev = Pattern::random(8, &mut rng);
            prop_assert_eq!(
                activate(&net_input(&p, &s).unwrap(), &prev).unwrap(),
                activate(&net_input(&scaled, &s).unwrap(), &prev).unwrap()
            );
        }
    }
}
