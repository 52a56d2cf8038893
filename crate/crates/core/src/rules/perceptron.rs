//! Weakest-pattern-first perceptron rules. Each neuron repeatedly reinforces
//! the pattern with the smallest margin until its stopping criterion holds.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::NetworkParams;
use crate::pattern::Pattern;

use super::{check_patterns, min_raw_margin, TrainReport};

#[derive(Clone, Copy)]
enum Stop {
    Positive,
    Normalized(f64),
}

impl Stop {
    fn holds(self, min_margin: f64, norm: f64) -> bool {
        match self {
            Stop::Positive => min_margin > 0.0,
            Stop::Normalized(k) => norm > 0.0 && min_margin / norm >= k,
        }
    }
}

/// Lowest index among the smallest entries.
fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (mu, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (mu, v);
        }
    }
    best
}

fn margins(params: &NetworkParams, patterns: &[Pattern], i: usize) -> Vec<f64> {
    patterns.iter().map(|p| p.get(i) * params.field(p, i)).collect()
}

/// Trains neuron `i` in place; returns `(updates, converged)`.
///
/// Margins are tracked through the pattern overlap matrix `gram` and
/// recomputed from the weights before the loop accepts a stop.
fn train_neuron(
    params: &mut NetworkParams,
    patterns: &[Pattern],
    gram: &DMatrix<f64>,
    i: usize,
    lr: f64,
    stop: Stop,
    maxiter: usize,
) -> (usize, bool) {
    let sc = params.self_coupling();
    let mut m = margins(params, patterns, i);
    let mut updates = 0;
    loop {
        let (star, min) = argmin(&m);
        if stop.holds(min, params.augmented_norm(i)) {
            let exact = margins(params, patterns, i);
            if stop.holds(argmin(&exact).1, params.augmented_norm(i)) {
                return (updates, true);
            }
            m = exact;
            continue;
        }
        if updates == maxiter {
            return (updates, false);
        }
        let target = &patterns[star];
        let s_star = target.get(i);
        {
            let w = params.weights_mut();
            for j in 0..w.ncols() {
                if j != i || sc {
                    w[(i, j)] += lr * s_star * target.get(j);
                }
            }
            params.biases_mut()[i] += lr * s_star;
        }
        for (mu, p) in patterns.iter().enumerate() {
            let mut overlap = gram[(star, mu)] + 1.0;
            if !sc {
                overlap -= target.get(i) * p.get(i);
            }
            m[mu] += lr * s_star * p.get(i) * overlap;
        }
        updates += 1;
    }
}

fn train_all(
    mut params: NetworkParams,
    patterns: &[Pattern],
    lr: f64,
    stop: Stop,
    maxiter: usize,
) -> Result<(NetworkParams, TrainReport)> {
    if patterns.is_empty() {
        return Err(Error::invalid("perceptron rules need at least one pattern"));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("lr must be positive, got {lr}")));
    }
    check_patterns(params.n(), patterns)?;
    let n = params.n();
    let spins = DMatrix::from_fn(n, patterns.len(), |j, mu| patterns[mu].get(j));
    let gram = spins.transpose() * &spins;
    let mut most_updates = 0;
    let mut converged = true;
    for i in 0..n {
        let (updates, ok) = train_neuron(&mut params, patterns, &gram, i, lr, stop, maxiter);
        most_updates = most_updates.max(updates);
        converged &= ok;
    }
    let report = TrainReport {
        sweeps_used: most_updates,
        final_objective: None,
        converged,
        min_margin: min_raw_margin(&params, patterns),
        si_fallbacks: 0,
    };
    Ok((params, report))
}

/// Per neuron, stops once every raw margin is strictly positive or after
/// `maxiter` updates. `sweeps_used` is the largest per-neuron update count.
pub fn krauth_mezard_train(
    params: NetworkParams,
    patterns: &[Pattern],
    lr: f64,
    maxiter: usize,
) -> Result<(NetworkParams, TrainReport)> {
    train_all(params, patterns, lr, Stop::Positive, maxiter)
}

/// As [`krauth_mezard_train`], stopping once `min_μ m^μ / ‖(ω_i, b_i)‖ ≥ margin_k`.
pub fn gardner_krauth_mezard_train(
    params: NetworkParams,
    patterns: &[Pattern],
    lr: f64,
    margin_k: f64,
    maxiter: usize,
) -> Result<(NetworkParams, TrainReport)> {
    if !(margin_k >= 0.0 && margin_k.is_finite()) {
        return Err(Error::invalid(format!("margin_k must be non-negative, got {margin_k}")));
    }
    train_all(params, patterns, lr, Stop::Normalized(margin_k), maxiter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::stability_margins;
    use crate::rules::init_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_patterns(n: usize, p: usize, seed: u64) -> Vec<Pattern> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..p).map(|_| Pattern::random(n, &mut rng)).collect()
    }

    #[test]
    fn single_pattern_from_blank_slate() {
        let s = Pattern::new(vec![1, -1, -1, 1]).unwrap();
        let (p, report) = krauth_mezard_train(NetworkParams::zeros(4, true), std::slice::from_ref(&s), 0.1, 10).unwrap();
        let v = s.to_vector();
        let hebb = &v * v.transpose() * 0.1;
        assert!((p.weights() - hebb).amax() < 1e-15);
        assert!((p.biases() - &v * 0.1).amax() < 1e-15);
        assert!(report.converged);
        assert_eq!(report.sweeps_used, 1);
        // Margin 0.1 · (N + 1).
        assert!((report.min_margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stable_patterns_need_no_updates() {
        let pats = random_patterns(8, 2, 1);
        let mut start = NetworkParams::zeros(8, true);
        crate::rules::hebbian_train(&mut start, &pats, 1.0).unwrap();
        let margins = stability_margins(&start, &pats).unwrap();
        assert!(margins.min_raw() > 0.0);
        let (p, report) = krauth_mezard_train(start.clone(), &pats, 0.01, 50).unwrap();
        assert_eq!(p, start);
        assert_eq!(report.sweeps_used, 0);
        assert!(report.converged);
    }

    #[test]
    fn over_capacity_does_not_converge() {
        for seed in 0..20 {
            let pats = random_patterns(16, 40, seed);
            let start = init_params(16, false, 0.01, seed).unwrap();
            let (_, report) = krauth_mezard_train(start, &pats, 0.01, 200).unwrap();
            assert!(!report.converged, "seed {seed}");
            assert!(report.min_margin <= 0.0);
        }
    }

    #[test]
    fn converged_implies_positive_margins() {
        let mut converged = 0;
        for (seed, sc) in (0..20).zip([true, false].into_iter().cycle()) {
            let pats = random_patterns(12, 6, seed);
            let start = init_params(12, sc, 0.01, seed).unwrap();
            let (p, report) = krauth_mezard_train(start, &pats, 0.05, 500).unwrap();
            if report.converged {
                converged += 1;
                assert!(stability_margins(&p, &pats).unwrap().min_raw() > 0.0);
            }
            if !sc {
                assert!((0..12).all(|i| p.weight(i, i) == 0.0));
            }
        }
        assert!(converged >= 15, "{converged}");
    }

    #[test]
    fn gardner_single_pattern_reaches_margin() {
        let pats = random_patterns(8, 1, 3);
        let start = init_params(8, true, 0.01, 3).unwrap();
        let (p, report) = gardner_krauth_mezard_train(start, &pats, 1e-2, 1.0, 100).unwrap();
        assert!(report.converged);
        let norm = stability_margins(&p, &pats).unwrap();
        assert!(norm.min_normalized().unwrap() >= 1.0);
    }

    #[test]
    fn gardner_converged_implies_normalized_margins() {
        for seed in 0..10 {
            let pats = random_patterns(16, 5, seed);
            let start = init_params(16, seed % 2 == 0, 0.01, seed).unwrap();
            let (p, report) = gardner_krauth_mezard_train(start, &pats, 1e-2, 1.0, 1000).unwrap();
            assert!(report.converged, "seed {seed}");
            assert!(stability_margins(&p, &pats).unwrap().min_normalized().unwrap() >= 1.0);
        }
    }

    #[test]
    fn gardner_at_zero_margin_converges_when_km_does() {
        for seed in 0..10 {
            let pats = random_patterns(10, 6, seed);
            let start = init_params(10, false, 0.01, seed).unwrap();
            let (_, km) = krauth_mezard_train(start.clone(), &pats, 0.02, 300).unwrap();
            let (_, gkm) = gardner_krauth_mezard_train(start, &pats, 0.02, 0.0, 300).unwrap();
            if km.converged {
                assert!(gkm.converged);
            }
        }
    }

    #[test]
    fn ties_pick_the_lowest_index() {
        assert_eq!(argmin(&[1.0, -2.0, -2.0, 0.0]), (1, -2.0));
    }

    #[test]
    fn negative_margin_k_is_rejected() {
        let pats = random_patterns(4, 1, 0);
        assert!(gardner_krauth_mezard_train(NetworkParams::zeros(4, true), &pats, 0.1, -1.0, 10).is_err());
    }
}
