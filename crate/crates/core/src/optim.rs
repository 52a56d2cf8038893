//! The quadratic learning objective of a single neuron and Newton's method on it.
//!
//! For neuron `i` with augmented weights `w = (ω_i, b_i)` and augmented
//! patterns `σ'^μ` stacked as the columns of `Z'`:
//!
//! ```text
//! f(w)  = ½ Σ_μ (λ h^μ − σ_i^μ)² + (α/2) ‖w‖²,   h^μ = (σ'^μ, w)
//! ∇f(w) = λ Σ_μ (λ h^μ − σ_i^μ) σ'^μ + α w
//! H     = α I + λ² Z' Z'ᵀ
//! ```
//!
//! The Hessian does not depend on `w`, so one Newton step from anywhere lands
//! on the minimizer when the inverse is exact.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;

/// `(ω_i, b_i)` for one neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedWeights(pub DVector<f64>);

impl AugmentedWeights {
    pub fn zeros(len: usize) -> Self {
        AugmentedWeights(DVector::zeros(len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Augmented patterns as columns, `(N+1) × p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternMatrix {
    columns: DMatrix<f64>,
}

impl PatternMatrix {
    pub fn new(n: usize, patterns: &[Pattern]) -> Result<Self> {
        let mut columns = DMatrix::zeros(n + 1, patterns.len());
        for (mu, p) in patterns.iter().enumerate() {
            Error::check_len(n, p.len())?;
            columns.set_column(mu, &p.augmented().to_vector());
        }
        Ok(PatternMatrix { columns })
    }

    /// Wraps an arbitrary `(N+1) × p` matrix.
    pub fn from_columns(columns: DMatrix<f64>) -> Self {
        PatternMatrix { columns }
    }

    /// The same matrix with input `i` zeroed. This is the design matrix of a
    /// neuron whose self-coupling weight is pinned at zero.
    pub fn without_input(&self, i: usize) -> Self {
        let mut columns = self.columns.clone();
        columns.row_mut(i).fill(0.0);
        PatternMatrix { columns }
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// `N + 1`.
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn count(&self) -> usize {
        self.columns.ncols()
    }

    /// Row `i` of the unaugmented patterns: `σ_i^μ` over `μ`.
    pub fn targets(&self, i: usize) -> DVector<f64> {
        self.columns.row(i).transpose()
    }

    pub fn correlation(&self) -> CorrelationMatrix {
        CorrelationMatrix(self.columns.transpose() * &self.columns)
    }
}

/// `C' = Z'ᵀ Z'`, `p × p`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix(pub DMatrix<f64>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum InverseMethod {
    NeumannTruncated { terms: usize },
    RankOneExact,
    /// Cholesky factorization of the full Hessian.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HessianInverse {
    pub matrix: DMatrix<f64>,
    pub method: InverseMethod,
}

fn check_problem(w: &AugmentedWeights, z: &PatternMatrix, targets: &DVector<f64>) -> Result<()> {
    Error::check_len(z.dim(), w.len())?;
    Error::check_len(z.count(), targets.len())
}

fn residuals(w: &AugmentedWeights, z: &PatternMatrix, targets: &DVector<f64>, lambda: f64) -> DVector<f64> {
    (z.columns.transpose() * &w.0) * lambda - targets
}

pub fn l2_objective(
    w: &AugmentedWeights,
    z: &PatternMatrix,
    targets: &DVector<f64>,
    lambda: f64,
    alpha: f64,
) -> Result<f64> {
    check_problem(w, z, targets)?;
    let r = residuals(w, z, targets, lambda);
    Ok(0.5 * r.norm_squared() + 0.5 * alpha * w.0.norm_squared())
}

pub fn l2_gradient(
    w: &AugmentedWeights,
    z: &PatternMatrix,
    targets: &DVector<f64>,
    lambda: f64,
    alpha: f64,
) -> Result<DVector<f64>> {
    check_problem(w, z, targets)?;
    let r = residuals(w, z, targets, lambda);
    Ok(&z.columns * r * lambda + &w.0 * alpha)
}

pub fn hessian(z: &PatternMatrix, lambda: f64, alpha: f64) -> DMatrix<f64> {
    let mut h = (&z.columns * z.columns.transpose()) * (lambda * lambda);
    for d in 0..h.nrows() {
        h[(d, d)] += alpha;
    }
    // Exact symmetry regardless of how the product rounded.
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// Spectral radius of `(λ²/α) Z'Z'ᵀ`, computed through the smaller `C'`.
pub fn neumann_ratio(z: &PatternMatrix, lambda: f64, alpha: f64) -> f64 {
    if z.count() == 0 {
        return 0.0;
    }
    let c = z.correlation().0;
    let top = c.symmetric_eigen().eigenvalues.max();
    lambda * lambda / alpha * top.max(0.0)
}

/// Truncated Neumann series
/// `(1/α) Σ_{k<terms} (−λ²/α)^k (Z'Z'ᵀ)^k`.
///
/// At `α = λ` this is the series `(1/α)(I − λZ'Z'ᵀ + λ²Z'C'Z'ᵀ − …)`.
pub fn hessian_inverse_neumann(
    z: &PatternMatrix,
    lambda: f64,
    alpha: f64,
    terms: usize,
) -> Result<HessianInverse> {
    if alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if terms == 0 {
        return Err(Error::invalid("Neumann series needs at least one term"));
    }
    let rho = neumann_ratio(z, lambda, alpha);
    if rho >= 1.0 {
        return Err(Error::Divergence(format!(
            "spectral radius of (λ²/α)Z'Z'ᵀ is {rho:.6} >= 1"
        )));
    }
    let ratio = lambda * lambda / alpha;
    let gram = &z.columns * z.columns.transpose();
    let dim = z.dim();
    let mut term = DMatrix::<f64>::identity(dim, dim);
    let mut sum = term.clone();
    for _ in 1..terms {
        term = (&term * &gram) * (-ratio);
        sum += &term;
    }
    Ok(HessianInverse {
        matrix: sum / alpha,
        method: InverseMethod::NeumannTruncated { terms },
    })
}

/// Exact inverse of `αI + λ² vvᵀ` by the rank-one update identity:
/// `(1/α)(I − λ²/(α + λ²‖v‖²) vvᵀ)`.
///
/// For an augmented pattern `‖v‖² = N + 1`; at `α = λ` the coefficient
/// reduces to `λ/(1 + λ(N+1))`.
pub fn hessian_inverse_rank_one(sigma_aug: &DVector<f64>, lambda: f64, alpha: f64) -> Result<HessianInverse> {
    if alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let l2 = lambda * lambda;
    let coef = l2 / (alpha + l2 * sigma_aug.norm_squared());
    let dim = sigma_aug.len();
    let matrix = (DMatrix::identity(dim, dim) - sigma_aug * sigma_aug.transpose() * coef) / alpha;
    Ok(HessianInverse {
        matrix,
        method: InverseMethod::RankOneExact,
    })
}

/// Inverse via Cholesky of the full Hessian. Works for any load when `α > 0`.
pub fn hessian_inverse_exact(z: &PatternMatrix, lambda: f64, alpha: f64) -> Result<HessianInverse> {
    if alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let h = hessian(z, lambda, alpha);
    let chol = h
        .cholesky()
        .ok_or_else(|| Error::Degenerate("Hessian is not positive definite".into()))?;
    Ok(HessianInverse {
        matrix: chol.inverse(),
        method: InverseMethod::Exact,
    })
}

/// `w − H⁻¹ ∇f(w)`.
pub fn newton_step(
    w: &AugmentedWeights,
    z: &PatternMatrix,
    targets: &DVector<f64>,
    lambda: f64,
    alpha: f64,
    inverse: &HessianInverse,
) -> Result<AugmentedWeights> {
    let g = l2_gradient(w, z, targets, lambda, alpha)?;
    Error::check_len(inverse.matrix.nrows(), g.len())?;
    Ok(AugmentedWeights(&w.0 - &inverse.matrix * g))
}
