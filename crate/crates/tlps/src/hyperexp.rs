//! Hyper-exponential job-size distributions and θ-truncated workload
//! statistics.
//!
//! A hyper-exponential distribution draws a phase `i` with probability `p_i`
//! and then an exponential of rate `μ_i`, so the complementary CDF is
//! `F̄(x) = Σ_i p_i e^{−μ_i x}`. The class has a decreasing hazard rate and,
//! with suitably chosen phase sequences, approximates heavy-tailed job sizes
//! arbitrarily well while keeping every TLPS quantity in closed form.
//!
//! [`TruncatedStats`] gathers everything that depends on the TLPS threshold
//! `θ`: the per-phase tail masses `F̄θⁱ = p_i e^{−μ_i θ}`, the moments of the
//! distribution truncated at `θ`, the truncated load `ρ_θ`, the mean residual
//! high-priority delay `W̄`, and the batch-queue constants (`n̄`, `b`, `b/F̄`)
//! that describe the low-priority queue as a PS queue with batch arrivals.

use rand::Rng;
use thiserror::Error;

/// Errors from distribution/model construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("weights and rates differ in length ({weights} vs {rates})")]
    LengthMismatch { weights: usize, rates: usize },
    #[error("at least one phase is required")]
    Empty,
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("rate {0} is not positive and finite")]
    BadRate(f64),
    #[error("weights sum to {0}, which deviates from 1 by more than 1e-9")]
    WeightSum(f64),
    #[error("tail exponent gamma1 = {0} must exceed 1")]
    TailExponent(f64),
    #[error(
        "rate exponent gamma2 = {gamma2} lies outside ((gamma1-1)/2, gamma1-1) for gamma1 = {gamma1}"
    )]
    RateExponent { gamma1: f64, gamma2: f64 },
    #[error("mean {0} must be positive and finite")]
    BadMean(f64),
    #[error("arrival rate {0} must be positive and finite")]
    BadArrivalRate(f64),
    #[error("unstable workload: load rho = {rho} is not below 1")]
    Unstable { rho: f64 },
    #[error("threshold {0} must be nonnegative and finite")]
    BadThreshold(f64),
    #[error("evaluation point {0} must be nonnegative and finite")]
    BadPoint(f64),
    #[error("tail mass at the threshold underflowed to zero; truncated distribution is degenerate")]
    DegenerateThreshold,
}

/// An N-phase hyper-exponential distribution: phase weights `p_i` and rates
/// `μ_i`, with `F̄(x) = Σ_i p_i e^{−μ_i x}`.
///
/// Weights are validated to be nonnegative and to sum to 1 within 1e-9 (and
/// are renormalized to sum to 1 exactly); rates must be positive. Phase order
/// is preserved as given.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperExp {
    weights: Vec<f64>,
    rates: Vec<f64>,
}

impl HyperExp {
    /// Build a distribution from phase weights and rates.
    pub fn new(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self, ModelError> {
        if weights.len() != rates.len() {
            return Err(ModelError::LengthMismatch {
                weights: weights.len(),
                rates: rates.len(),
            });
        }
        if weights.is_empty() {
            return Err(ModelError::Empty);
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(ModelError::BadWeight(w));
            }
        }
        for &r in &rates {
            if !r.is_finite() || r <= 0.0 {
                return Err(ModelError::BadRate(r));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ModelError::WeightSum(sum));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { weights, rates })
    }

    /// A family of hyper-exponentials with polynomially decaying weights and
    /// rates: for `i = 1..=n`, `p_i = ν i^{−γ₁}` (ν normalizes the weights)
    /// and `μ_i = η i^{−γ₂}` with `η = (ν/mean) Σ_i i^{γ₂−γ₁}`, so the first
    /// moment equals `mean` exactly.
    ///
    /// The exponent band `(γ₁−1)/2 < γ₂ < γ₁−1` keeps the mean finite while
    /// letting the second moment grow without bound as `n → ∞`, which makes
    /// the family a controllable stand-in for a heavy-tailed size
    /// distribution with ever larger variance.
    pub fn heavy_tail_family(
        n: usize,
        gamma1: f64,
        gamma2: f64,
        mean: f64,
    ) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::Empty);
        }
        if !gamma1.is_finite() || gamma1 <= 1.0 {
            return Err(ModelError::TailExponent(gamma1));
        }
        if !gamma2.is_finite() || gamma2 <= (gamma1 - 1.0) / 2.0 || gamma2 >= gamma1 - 1.0 {
            return Err(ModelError::RateExponent { gamma1, gamma2 });
        }
        if !mean.is_finite() || mean <= 0.0 {
            return Err(ModelError::BadMean(mean));
        }
        let weight_norm: f64 = (1..=n).map(|i| (i as f64).powf(-gamma1)).sum();
        let nu = 1.0 / weight_norm;
        let eta = nu / mean * (1..=n).map(|i| (i as f64).powf(gamma2 - gamma1)).sum::<f64>();
        let weights: Vec<f64> = (1..=n).map(|i| nu * (i as f64).powf(-gamma1)).collect();
        let rates: Vec<f64> = (1..=n).map(|i| eta * (i as f64).powf(-gamma2)).collect();
        Self::new(weights, rates)
    }

    pub fn num_phases(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Smallest phase rate (sets the slowest decay scale of the tail).
    pub fn min_rate(&self) -> f64 {
        self.rates.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest phase rate (sets the fastest transient scale).
    pub fn max_rate(&self) -> f64 {
        self.rates.iter().cloned().fold(0.0, f64::max)
    }

    /// First moment `m = Σ p_i/μ_i`.
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(p, mu)| p / mu)
            .sum()
    }

    /// Second moment `d = 2 Σ p_i/μ_i²`.
    pub fn second_moment(&self) -> f64 {
        2.0 * self
            .weights
            .iter()
            .zip(&self.rates)
            .map(|(p, mu)| p / (mu * mu))
            .sum::<f64>()
    }

    /// `(mean, second moment)` in one call.
    pub fn moments(&self) -> (f64, f64) {
        (self.mean(), self.second_moment())
    }

    /// Complementary CDF `F̄(x) = Σ p_i e^{−μ_i x}` for `x ≥ 0`.
    pub fn ccdf(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(p, mu)| p * (-mu * x).exp())
            .sum()
    }

    /// Draw one job size: pick phase `i` with probability `p_i`, then an
    /// exponential of rate `μ_i`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut phase = self.weights.len() - 1;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                phase = i;
                break;
            }
        }
        // 1 − random() lies in (0, 1], so the log is finite.
        let e: f64 = -(1.0 - rng.random::<f64>()).ln();
        e / self.rates[phase]
    }
}

/// A TLPS workload: Poisson arrivals of rate `λ` with hyper-exponential job
/// sizes. Construction enforces stability (`ρ = λ·m < 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TlpsModel {
    dist: HyperExp,
    lambda: f64,
}

impl TlpsModel {
    pub fn new(dist: HyperExp, lambda: f64) -> Result<Self, ModelError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(ModelError::BadArrivalRate(lambda));
        }
        let rho = lambda * dist.mean();
        if rho >= 1.0 {
            return Err(ModelError::Unstable { rho });
        }
        Ok(Self { dist, lambda })
    }

    pub fn dist(&self) -> &HyperExp {
        &self.dist
    }

    pub fn arrival_rate(&self) -> f64 {
        self.lambda
    }

    pub fn mean_job_size(&self) -> f64 {
        self.dist.mean()
    }

    /// Offered load `ρ = λ·m`, strictly below 1.
    pub fn load(&self) -> f64 {
        self.lambda * self.dist.mean()
    }

    /// Compute every θ-dependent statistic at one threshold.
    ///
    /// With `F̄θⁱ = p_i e^{−μ_i θ}`, the truncated moments are the moments of
    /// the size distribution cut at θ (mass above θ counted at θ):
    ///
    /// * `x1 = ∫₀^θ F̄(y) dy = m − Σ F̄θⁱ/μ_i`
    /// * `x2 = ∫₀^θ 2y F̄(y) dy = d − 2θ(m − x1) − 2Σ F̄θⁱ/μ_i²`
    ///
    /// (both follow by integrating the exponentials term by term; `x2 → d`
    /// as θ → ∞, which the large-θ tests pin down). From these:
    /// `ρ_θ = λ·x1`, `W̄ = λ·x2/(2(1−ρ_θ))`, `γ = λ/(1−ρ_θ)`,
    /// `δρ = (1−ρ)/(1−ρ_θ)`, `q = (ρ−ρ_θ)/(1−ρ_θ)`, and the batch-queue
    /// constants `n̄ = F̄(θ)/(1−ρ_θ)` and `b = 2λF̄(θ)(W̄+θ)/(1−ρ_θ)`.
    ///
    /// The ratio `b/F̄(θ)` is computed from the cancelled form
    /// `2λ(W̄+θ)/(1−ρ_θ)` so it stays finite as `F̄(θ)` underflows.
    pub fn truncated_stats(&self, theta: f64) -> Result<TruncatedStats, ModelError> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(ModelError::BadThreshold(theta));
        }
        let (m, d) = self.dist.moments();
        let lambda = self.lambda;
        let rho = self.load();

        let tail_components: Vec<f64> = self
            .dist
            .weights
            .iter()
            .zip(&self.dist.rates)
            .map(|(p, mu)| p * (-mu * theta).exp())
            .collect();
        let ccdf_at_theta: f64 = tail_components.iter().sum();

        // Σ F̄θⁱ/μ_i and Σ F̄θⁱ/μ_i²: the tail-weighted inverse-rate sums.
        let tail_over_rate: f64 = tail_components
            .iter()
            .zip(&self.dist.rates)
            .map(|(f, mu)| f / mu)
            .sum();
        let tail_over_rate2: f64 = tail_components
            .iter()
            .zip(&self.dist.rates)
            .map(|(f, mu)| f / (mu * mu))
            .sum();

        let x1 = m - tail_over_rate;
        let x2 = d - 2.0 * theta * tail_over_rate - 2.0 * tail_over_rate2;
        let rho_theta = lambda * x1;
        let one_minus = 1.0 - rho_theta;
        let w_bar = lambda * x2 / (2.0 * one_minus);
        let gamma = lambda / one_minus;
        let delta_rho = (1.0 - rho) / one_minus;
        let q = (rho - rho_theta) / one_minus;
        let b_over_f = 2.0 * lambda * (w_bar + theta) / one_minus;
        let mean_batch = ccdf_at_theta / one_minus;
        let batch_extra = b_over_f * ccdf_at_theta;

        Ok(TruncatedStats {
            theta,
            tail_components,
            ccdf_at_theta,
            x1,
            x2,
            rho_theta,
            w_bar,
            gamma,
            delta_rho,
            q,
            mean_batch,
            batch_extra,
            b_over_f,
            rates: self.dist.rates.clone(),
        })
    }
}

/// Every θ-dependent quantity of the TLPS analysis, computed once per
/// threshold by [`TlpsModel::truncated_stats`].
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedStats {
    /// The threshold θ.
    pub theta: f64,
    /// Per-phase tail masses `F̄θⁱ = p_i e^{−μ_i θ}`.
    pub tail_components: Vec<f64>,
    /// `F̄(θ) = Σ F̄θⁱ`.
    pub ccdf_at_theta: f64,
    /// First truncated moment `X̄θ¹`.
    pub x1: f64,
    /// Second truncated moment `X̄θ²`.
    pub x2: f64,
    /// Truncated load `ρ_θ = λ·x1`.
    pub rho_theta: f64,
    /// Mean waiting contribution of the high-priority queue,
    /// `W̄ = λ·x2/(2(1−ρ_θ))`.
    pub w_bar: f64,
    /// `γ = λ/(1−ρ_θ)`.
    pub gamma: f64,
    /// `δρ = (1−ρ)/(1−ρ_θ) = 1 − γ(m − x1)`.
    pub delta_rho: f64,
    /// Contraction ratio `q = γ(m − x1) = (ρ−ρ_θ)/(1−ρ_θ) < 1`.
    pub q: f64,
    /// Mean batch size of the low-priority queue, `n̄ = F̄(θ)/(1−ρ_θ)`.
    pub mean_batch: f64,
    /// Mean number of extra low-priority arrivals per tagged job,
    /// `b = 2λF̄(θ)(W̄+θ)/(1−ρ_θ)`.
    pub batch_extra: f64,
    /// The stable ratio `b/F̄(θ) = 2λ(W̄+θ)/(1−ρ_θ)`.
    pub b_over_f: f64,
    rates: Vec<f64>,
}

impl TruncatedStats {
    /// Phase rates of the underlying distribution (same order as
    /// `tail_components`).
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Complementary CDF of the remainder distribution,
    /// `B̄(x) = F̄(θ+x)/F̄(θ) = Σ F̄θⁱ e^{−μ_i x} / F̄(θ)`.
    pub fn truncated_ccdf(&self, x: f64) -> Result<f64, ModelError> {
        if !x.is_finite() || x < 0.0 {
            return Err(ModelError::BadPoint(x));
        }
        if self.ccdf_at_theta == 0.0 {
            return Err(ModelError::DegenerateThreshold);
        }
        let num: f64 = self
            .tail_components
            .iter()
            .zip(&self.rates)
            .map(|(f, mu)| f * (-mu * x).exp())
            .sum();
        Ok(num / self.ccdf_at_theta)
    }
}
