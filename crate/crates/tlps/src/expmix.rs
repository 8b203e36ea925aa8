//! Exponential-mixture functions and the integral operators Φ₁, Φ₂.
//!
//! The low-priority-queue analysis runs inside the class of functions
//! `β(x) = a₀ + Σ_k a_k e^{−b_k x}` (constants plus decaying exponentials):
//! the derivative of the batch-queue delay function has this shape, and the
//! two operators that appear in its fixed-point equation map the class into
//! itself in a finite-dimensional way. With `F̄θⁱ = p_i e^{−μ_i θ}`:
//!
//! * `Φ₁(β)(x) = γ ∫₀^∞ β(y) F̄(x+y+θ) dy + γ ∫₀^x β(y) F̄(x−y+θ) dy`
//! * `Φ₂(β)   = ∫₀^∞ β(y) F̄(y+θ) dy = Σ_j F̄θʲ · L_β(μ_j)`
//!
//! where `L_β(s) = a₀/s + Σ_k a_k/(s+b_k)` is the Laplace transform of `β`.
//! Φ₁ itself is never materialized as a function (its image picks up
//! `x·e^{−μx}` terms whenever rates coincide); only its Laplace-domain action
//! and the composition `Φ₂∘Φ₁` are needed, and both are exact finite sums:
//!
//! `Φ₂(Φ₁(β)) = 2γ Σ_{i,j} F̄θⁱ F̄θʲ L_β(μ_j) / (μ_i + μ_j)`.
//!
//! Key facts the tests pin down: `Φ₁(c) = c·q` for constants, and for any
//! mixture with nonnegative coefficients the ordering
//! `Φ₂(Φ₁(β)) ≤ q·Φ₂(β)` holds — the contraction that makes the operator
//! series summable and the closed-form upper bound valid.

use crate::hyperexp::TruncatedStats;
use thiserror::Error;

/// Errors from mixture construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixtureError {
    #[error("term rate {0} must be positive and finite")]
    BadRate(f64),
    #[error("coefficient {0} is not finite")]
    BadCoefficient(f64),
    #[error("Laplace evaluation point s = {0} must be positive")]
    BadPoint(f64),
    #[error("operator ordering requires nonnegative coefficients (found {0})")]
    NegativeCoefficient(f64),
}

/// A function `β(x) = a₀ + Σ_k a_k e^{−b_k x}` on `x ≥ 0`.
///
/// Coefficients may be negative (the class is a vector space); nonnegativity
/// is only required — and checked — where an operator inequality needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMixture {
    /// The constant part a₀.
    pub constant: f64,
    /// Exponential terms as (coefficient a_k, rate b_k) pairs; all rates > 0.
    pub terms: Vec<(f64, f64)>,
}

impl ExpMixture {
    pub fn new(constant: f64, terms: Vec<(f64, f64)>) -> Result<Self, MixtureError> {
        if !constant.is_finite() {
            return Err(MixtureError::BadCoefficient(constant));
        }
        for &(a, b) in &terms {
            if !a.is_finite() {
                return Err(MixtureError::BadCoefficient(a));
            }
            if !b.is_finite() || b <= 0.0 {
                return Err(MixtureError::BadRate(b));
            }
        }
        Ok(Self { constant, terms })
    }

    /// The constant function `β(x) = c`.
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    /// The zero function.
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The shifted tail `F̄(x+θ) = Σ_i F̄θⁱ e^{−μ_i x}` of a truncated
    /// workload — the forcing mixture of the fixed-point equation.
    pub fn shifted_ccdf(stats: &TruncatedStats) -> Self {
        Self {
            constant: 0.0,
            terms: stats
                .tail_components
                .iter()
                .zip(stats.rates())
                .map(|(&f, &mu)| (f, mu))
                .collect(),
        }
    }

    /// Evaluate `β(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(a, b)| a * (-b * x).exp())
                .sum::<f64>()
    }

    /// Laplace transform `L_β(s) = a₀/s + Σ_k a_k/(s+b_k)` for `s > 0`.
    pub fn laplace_at(&self, s: f64) -> Result<f64, MixtureError> {
        if !s.is_finite() || s <= 0.0 {
            return Err(MixtureError::BadPoint(s));
        }
        Ok(self.constant / s
            + self
                .terms
                .iter()
                .map(|&(a, b)| a / (s + b))
                .sum::<f64>())
    }

    /// True when `a₀ ≥ 0` and every term coefficient is ≥ 0 (a sufficient
    /// condition for `β ≥ 0` and for `μ·L_β(μ)` to be nondecreasing in `μ`).
    pub fn coefficients_nonnegative(&self) -> bool {
        self.constant >= 0.0 && self.terms.iter().all(|&(a, _)| a >= 0.0)
    }
}

/// `Φ₂(f) = ∫₀^∞ f(y) F̄(y+θ) dy = Σ_j F̄θʲ L_f(μ_j)`.
pub fn phi2(stats: &TruncatedStats, f: &ExpMixture) -> f64 {
    stats
        .tail_components
        .iter()
        .zip(stats.rates())
        .map(|(&fj, &mu)| {
            fj * f
                .laplace_at(mu)
                .expect("phase rates are positive by construction")
        })
        .sum()
}

/// The composition `Φ₂(Φ₁(f)) = 2γ Σ_{i,j} F̄θⁱ F̄θʲ L_f(μ_j)/(μ_i+μ_j)`.
pub fn phi2_phi1(stats: &TruncatedStats, f: &ExpMixture) -> f64 {
    let laplace: Vec<f64> = stats
        .rates()
        .iter()
        .map(|&mu| {
            f.laplace_at(mu)
                .expect("phase rates are positive by construction")
        })
        .collect();
    let mut acc = 0.0;
    for (&fi, &mui) in stats.tail_components.iter().zip(stats.rates()) {
        for ((&fj, &muj), &lj) in stats
            .tail_components
            .iter()
            .zip(stats.rates())
            .zip(&laplace)
        {
            acc += fi * fj * lj / (mui + muj);
        }
    }
    2.0 * stats.gamma * acc
}

/// `Φ₁` applied to the constant function `c`: the result is the constant
/// `c·q` (both integrals in Φ₁ of a constant add up to `γ ∫_θ^∞ F̄ = q`).
pub fn phi1_const(stats: &TruncatedStats, c: f64) -> f64 {
    c * stats.q
}

/// The ordering gap `q·Φ₂(f) − Φ₂(Φ₁(f))`.
///
/// For any mixture with nonnegative coefficients the gap is nonnegative:
/// `μ·L_f(μ)` is then nondecreasing in `μ`, which makes the pairwise
/// rearrangement `(L_f(μ_j)μ_j − L_f(μ_i)μ_i)(μ_j − μ_i) ≥ 0` hold and the
/// double sum of `Φ₂∘Φ₁` dominated by `q·Φ₂`. Mixtures with negative
/// coefficients are rejected — the inequality can genuinely fail there.
pub fn contraction_gap(stats: &TruncatedStats, f: &ExpMixture) -> Result<f64, MixtureError> {
    if f.constant < 0.0 {
        return Err(MixtureError::NegativeCoefficient(f.constant));
    }
    if let Some(&(a, _)) = f.terms.iter().find(|&&(a, _)| a < 0.0) {
        return Err(MixtureError::NegativeCoefficient(a));
    }
    Ok(stats.q * phi2(stats, f) - phi2_phi1(stats, f))
}
