//! One-shot rules: Hebbian, Storkey, and the pseudo-inverse projection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::NetworkParams;
use crate::pattern::Pattern;

use super::check_patterns;

/// `Δω_ij = λσ_iσ_j`, `Δb_i = λσ_i`.
pub fn hebbian_step(params: &mut NetworkParams, pattern: &Pattern, lambda: f64) -> Result<()> {
    check_patterns(params.n(), std::slice::from_ref(pattern))?;
    let s = pattern.to_vector();
    params.weights_mut().ger(lambda, &s, &s, 1.0);
    params.biases_mut().axpy(lambda, &s, 1.0);
    params.mask_diagonal();
    Ok(())
}

pub fn hebbian_train(params: &mut NetworkParams, patterns: &[Pattern], lambda: f64) -> Result<()> {
    check_patterns(params.n(), patterns)?;
    for p in patterns {
        hebbian_step(params, p, lambda)?;
    }
    Ok(())
}

/// Storkey increment for one pattern at the given parameters.
///
/// `Δω_ij = (λ/N)(σ_iσ_j − σ_i h_ji − h_ij σ_j)` with the partial field
/// `h_ij = Σ_{k∉{i,j}} ω_ik σ_k + b_i`. The bias is the weight from an
/// always-on unit that has no afferents of its own, so
/// `Δb_i = (λ/N)(σ_i − Σ_{k≠i} ω_ik σ_k)`.
fn storkey_increment(params: &NetworkParams, pattern: &Pattern, lambda: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = params.n();
    let w = params.weights();
    let s = pattern.to_vector();
    let h = w * &s + params.biases();
    let partial = |i: usize, j: usize| {
        let mut v = h[i] - w[(i, i)] * s[i];
        if j != i {
            v -= w[(i, j)] * s[j];
        }
        v
    };
    let scale = lambda / n as f64;
    let dw = DMatrix::from_fn(n, n, |i, j| scale * (s[i] * s[j] - s[i] * partial(j, i) - partial(i, j) * s[j]));
    let db = DVector::from_fn(n, |i, _| {
        let afferent = h[i] - w[(i, i)] * s[i] - params.bias(i);
        scale * (s[i] - afferent)
    });
    (dw, db)
}

pub fn storkey_step(params: &mut NetworkParams, pattern: &Pattern, lambda: f64) -> Result<()> {
    check_patterns(params.n(), std::slice::from_ref(pattern))?;
    let (dw, db) = storkey_increment(params, pattern, lambda);
    *params.weights_mut() += dw;
    *params.biases_mut() += db;
    params.mask_diagonal();
    Ok(())
}

/// Incremental: patterns applied one after another. Non-incremental: every
/// increment is evaluated at the starting parameters and summed.
pub fn storkey_train(params: &mut NetworkParams, patterns: &[Pattern], lambda: f64, incremental: bool) -> Result<()> {
    check_patterns(params.n(), patterns)?;
    if incremental {
        for p in patterns {
            storkey_step(params, p, lambda)?;
        }
        return Ok(());
    }
    let n = params.n();
    let mut dw = DMatrix::zeros(n, n);
    let mut db = DVector::zeros(n);
    for p in patterns {
        let (w, b) = storkey_increment(params, p, lambda);
        dw += w;
        db += b;
    }
    *params.weights_mut() += dw;
    *params.biases_mut() += db;
    params.mask_diagonal();
    Ok(())
}

/// Projection onto the span of the patterns: `W = Z(ZᵀZ)⁻¹Zᵀ`, `b = 0`.
pub fn pseudo_inverse_train(patterns: &[Pattern], n: usize, sc: bool) -> Result<NetworkParams> {
    if n == 0 {
        return Err(Error::invalid("network size must be positive"));
    }
    check_patterns(n, patterns)?;
    let p = patterns.len();
    if p == 0 {
        return Err(Error::Degenerate("pseudo-inverse needs at least one pattern".into()));
    }
    if p > n {
        return Err(Error::Degenerate(format!(
            "{p} patterns cannot be linearly independent in {n} dimensions"
        )));
    }
    let mut z = DMatrix::zeros(n, p);
    for (mu, pat) in patterns.iter().enumerate() {
        z.set_column(mu, &pat.to_vector());
    }
    let gram = z.transpose() * &z;
    // Eigenvalues of the Gram matrix are the squared singular values of Z.
    let eig = gram.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= hi * 1e-10 {
        return Err(Error::Degenerate(format!(
            "patterns are linearly dependent (Gram eigenvalues span [{lo:.3e}, {hi:.3e}])"
        )));
    }
    let gram_inv = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("Gram matrix is not positive definite".into()))?
        .inverse();
    let w = &z * gram_inv * z.transpose();
    let w = (&w + w.transpose()) * 0.5;
    NetworkParams::from_parts(w, DVector::zeros(n), sc)
}
