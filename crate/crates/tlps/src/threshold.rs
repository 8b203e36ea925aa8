//! Threshold selection: numeric minimization of `T̄(θ)` for any model, the
//! closed-form two-phase approximation of the optimum, and the derived
//! gain and bound-error curves.
//!
//! For a two-phase model with ordered rates `μ₁ > μ₂` the sojourn curve is
//! well approximated near its minimum by
//! `T̃(θ) = const − c₁(1−e^{−μ₁θ}) + c₂(1−e^{−μ₂θ})` with
//!
//! `c₁ = λ(mμ₁−1)/(μ₁(μ₁−λ)(1−ρ))`,  `c₂ = λ(mμ₁−1)/(μ₁−λ)²`,
//!
//! whose stationary point is explicit:
//!
//! `θ̃_opt = ln((μ₁−λ)/(μ₂(1−ρ)))/(μ₁−μ₂)`.
//!
//! Along the family `μ₂ = εμ₁`, `p₂ = ε(mμ₁−1)/(1−ε)` the value
//! `T̄(θ̃_opt)` tends to `m/(1−ρ) − c₁` as ε → 0, so the approximation
//! becomes exact in the interesting regime of widely separated rates.

use crate::analytic::{
    nphase_sojourn_linear, ps_sojourn, two_phase_sojourn, upper_bound, AnalyticError,
};
use crate::hyperexp::{HyperExp, ModelError, TlpsModel};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("operation requires exactly {expected} phases, model has {got}")]
    PhaseCount { expected: usize, got: usize },
    #[error("phase rates must be strictly decreasing (fast phase first)")]
    UnorderedRates,
    #[error("second phase carries no mass (m·μ₁ ≤ 1): threshold approximation undefined")]
    DegenerateSecondPhase,
    #[error("search range [{min}, {max}] is invalid: need 0 ≤ min < max, both finite")]
    BadRange { min: f64, max: f64 },
    #[error("grid needs at least 8 points, got {0}")]
    TooFewGridPoints(usize),
    #[error("rate separation ε must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
}

/// Constants of the two-phase sojourn approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseConstants {
    pub c1: f64,
    pub c2: f64,
    /// Rate separation `μ₂/μ₁`.
    pub epsilon: f64,
}

fn two_phase_ordered(model: &TlpsModel) -> Result<(f64, f64), ThresholdError> {
    let rates = model.dist().rates();
    if rates.len() != 2 {
        return Err(ThresholdError::PhaseCount {
            expected: 2,
            got: rates.len(),
        });
    }
    if rates[0] <= rates[1] {
        return Err(ThresholdError::UnorderedRates);
    }
    Ok((rates[0], rates[1]))
}

impl TwoPhaseConstants {
    /// Compute `c₁`, `c₂`, ε for an ordered two-phase model.
    pub fn for_model(model: &TlpsModel) -> Result<Self, ThresholdError> {
        let (mu1, mu2) = two_phase_ordered(model)?;
        let m = model.mean_job_size();
        let lambda = model.arrival_rate();
        let rho = model.load();
        if m * mu1 <= 1.0 {
            return Err(ThresholdError::DegenerateSecondPhase);
        }
        let c1 = lambda * (m * mu1 - 1.0) / (mu1 * (mu1 - lambda) * (1.0 - rho));
        let c2 = lambda * (m * mu1 - 1.0) / ((mu1 - lambda) * (mu1 - lambda));
        debug_assert!(c1 > 0.0 && c2 > 0.0);
        Ok(Self {
            c1,
            c2,
            epsilon: mu2 / mu1,
        })
    }
}

/// Stationary point of the two-phase approximation,
/// `θ̃_opt = ln((μ₁−λ)/(μ₂(1−ρ)))/(μ₁−μ₂)`; always positive on its domain.
pub fn approx_threshold(model: &TlpsModel) -> Result<f64, ThresholdError> {
    let (mu1, mu2) = two_phase_ordered(model)?;
    let m = model.mean_job_size();
    let lambda = model.arrival_rate();
    let rho = model.load();
    if m * mu1 <= 1.0 {
        return Err(ThresholdError::DegenerateSecondPhase);
    }
    // m·μ₁ > 1 and ρ < 1 imply μ₁ρ > λ, hence μ₁ > λ and a positive log
    // argument.
    debug_assert!(mu1 * rho > lambda);
    let theta = ((mu1 - lambda) / (mu2 * (1.0 - rho))).ln() / (mu1 - mu2);
    debug_assert!(theta > 0.0, "approximated optimum must be positive");
    Ok(theta)
}

/// Derivative of the two-phase approximation,
/// `T̃′(θ) = −e^{−μ₁θ}μ₁c₁ + e^{−μ₂θ}μ₂c₂`; its root is [`approx_threshold`].
pub fn approx_derivative(model: &TlpsModel, theta: f64) -> Result<f64, ThresholdError> {
    let (mu1, mu2) = two_phase_ordered(model)?;
    let c = TwoPhaseConstants::for_model(model)?;
    Ok(-(-mu1 * theta).exp() * mu1 * c.c1 + (-mu2 * theta).exp() * mu2 * c.c2)
}

/// Limiting value of `T̄(θ̃_opt)` as the rate separation ε → 0:
/// `m/(1−ρ) − c₁`.
pub fn limit_sojourn(model: &TlpsModel) -> Result<f64, ThresholdError> {
    let c = TwoPhaseConstants::for_model(model)?;
    Ok(ps_sojourn(model) - c.c1)
}

/// How [`optimize_threshold`] located the reported optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// Grid scan followed by golden-section refinement around the interior
    /// argmin.
    GoldenSection,
    /// The grid argmin sat on a range boundary; no refinement was attempted.
    GridBoundary,
}

impl SearchMethod {
    pub fn name(self) -> &'static str {
        match self {
            SearchMethod::GoldenSection => "golden-section",
            SearchMethod::GridBoundary => "grid-boundary",
        }
    }
}

/// Result of a threshold search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearchResult {
    pub theta_opt: f64,
    /// `T̄(θ_opt)`.
    pub t_at_opt: f64,
    /// The scanned grid as (θ, T̄(θ)) pairs.
    pub grid: Vec<(f64, f64)>,
    /// Relative improvement over plain PS, `(T̄ᴾˢ − T̄(θ_opt))/T̄ᴾˢ`,
    /// clamped at zero (a flat objective can dip below by rounding).
    pub gain_at_opt: f64,
    pub method_used: SearchMethod,
    /// Set when the argmin sat on the search boundary; widen the range.
    pub at_boundary: bool,
}

/// Default search range end: past `50/μ_min` the objective is within 1e-6
/// of its PS limit.
pub fn default_theta_max(model: &TlpsModel) -> f64 {
    50.0 / model.dist().min_rate()
}

fn sojourn_at(model: &TlpsModel, theta: f64) -> Result<f64, ThresholdError> {
    Ok(nphase_sojourn_linear(model, theta)?.t_total)
}

/// Minimize `T̄(θ)` over `[theta_min, theta_max]`: uniform grid scan, then
/// golden-section refinement of the bracket around the interior argmin down
/// to a width of `1e-6·(theta_max−theta_min)`. Deterministic: identical
/// inputs produce bit-identical results.
pub fn optimize_threshold(
    model: &TlpsModel,
    theta_min: f64,
    theta_max: f64,
    grid_points: usize,
) -> Result<ThresholdSearchResult, ThresholdError> {
    if !(theta_min.is_finite() && theta_max.is_finite() && 0.0 <= theta_min && theta_min < theta_max)
    {
        return Err(ThresholdError::BadRange {
            min: theta_min,
            max: theta_max,
        });
    }
    if grid_points < 8 {
        return Err(ThresholdError::TooFewGridPoints(grid_points));
    }
    let span = theta_max - theta_min;
    let mut grid = Vec::with_capacity(grid_points);
    for k in 0..grid_points {
        let theta = theta_min + span * k as f64 / (grid_points - 1) as f64;
        grid.push((theta, sojourn_at(model, theta)?));
    }
    let argmin = grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .expect("grid is nonempty");

    let ps = ps_sojourn(model);
    let make = |theta_opt: f64, t_at_opt: f64, method: SearchMethod, at_boundary: bool| {
        ThresholdSearchResult {
            theta_opt,
            t_at_opt,
            gain_at_opt: ((ps - t_at_opt) / ps).max(0.0),
            grid: grid.clone(),
            method_used: method,
            at_boundary,
        }
    };

    if argmin == 0 || argmin == grid_points - 1 {
        let (theta, t) = grid[argmin];
        return Ok(make(theta, t, SearchMethod::GridBoundary, true));
    }

    // Golden-section on the bracketing interval.
    const INV_GOLD: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (grid[argmin - 1].0, grid[argmin + 1].0);
    let mut c = b - INV_GOLD * (b - a);
    let mut d = a + INV_GOLD * (b - a);
    let mut fc = sojourn_at(model, c)?;
    let mut fd = sojourn_at(model, d)?;
    while b - a > 1e-6 * span {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLD * (b - a);
            fc = sojourn_at(model, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLD * (b - a);
            fd = sojourn_at(model, d)?;
        }
    }
    let theta_ref = 0.5 * (a + b);
    let t_ref = sojourn_at(model, theta_ref)?;
    // Guard against a refinement that rounds worse than the scan.
    let (theta_opt, t_at_opt) = if t_ref <= grid[argmin].1 {
        (theta_ref, t_ref)
    } else {
        grid[argmin]
    };
    Ok(make(theta_opt, t_at_opt, SearchMethod::GoldenSection, false))
}

/// Which multiple of the approximated optimum a gain curve evaluates at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaRule {
    /// `θ = θ̃_opt`.
    Approx,
    /// `θ = θ̃_opt/2` (robustness probe below the optimum).
    HalfApprox,
    /// `θ = 3θ̃_opt/2` (robustness probe above the optimum).
    ThreeHalvesApprox,
}

impl ThetaRule {
    pub fn multiplier(self) -> f64 {
        match self {
            ThetaRule::Approx => 1.0,
            ThetaRule::HalfApprox => 0.5,
            ThetaRule::ThreeHalvesApprox => 1.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ThetaRule::Approx => "approx",
            ThetaRule::HalfApprox => "half-approx",
            ThetaRule::ThreeHalvesApprox => "three-halves-approx",
        }
    }
}

/// A two-phase family with fixed shape and varying load: mean `m`, fast
/// rate `μ₁`, separation `μ₂ = εμ₁`, second-phase mass
/// `p₂ = ε(mμ₁−1)/(1−ε)`; the load is set through `λ = ρ/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseFamily {
    pub mean: f64,
    pub mu1: f64,
    pub epsilon: f64,
}

impl TwoPhaseFamily {
    pub fn new(mean: f64, mu1: f64, epsilon: f64) -> Result<Self, ThresholdError> {
        if !(epsilon.is_finite() && 0.0 < epsilon && epsilon < 1.0) {
            return Err(ThresholdError::BadEpsilon(epsilon));
        }
        if !(mean.is_finite() && mean > 0.0) {
            return Err(ThresholdError::Model(ModelError::BadMean(mean)));
        }
        if !(mu1.is_finite() && mu1 > 0.0) {
            return Err(ThresholdError::Model(ModelError::BadRate(mu1)));
        }
        if mean * mu1 <= 1.0 {
            return Err(ThresholdError::DegenerateSecondPhase);
        }
        Ok(Self { mean, mu1, epsilon })
    }

    /// The family member distribution (independent of load).
    pub fn dist(&self) -> HyperExp {
        let p2 = self.epsilon * (self.mean * self.mu1 - 1.0) / (1.0 - self.epsilon);
        HyperExp::new(
            vec![1.0 - p2, p2],
            vec![self.mu1, self.epsilon * self.mu1],
        )
        .expect("family parameters validated at construction")
    }

    /// The family member at load ρ (`λ = ρ/m`).
    pub fn model_at_load(&self, rho: f64) -> Result<TlpsModel, ThresholdError> {
        Ok(TlpsModel::new(self.dist(), rho / self.mean)?)
    }
}

/// Gain over plain PS along a load sweep, with θ picked by `rule` from the
/// closed-form approximation at each load: returns (ρ, gain) pairs.
pub fn gain_curve(
    family: &TwoPhaseFamily,
    rhos: &[f64],
    rule: ThetaRule,
) -> Result<Vec<(f64, f64)>, ThresholdError> {
    let mut out = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let model = family.model_at_load(rho)?;
        let theta = rule.multiplier() * approx_threshold(&model)?;
        let t = two_phase_sojourn(&model, theta)?.t_total;
        let ps = ps_sojourn(&model);
        out.push((rho, (ps - t) / ps));
    }
    Ok(out)
}

/// Relative error of the upper bound along a threshold grid:
/// returns (θ, Δ(θ)) with `Δ = (Ῡ−T̄)/T̄ ≥ 0`, `Δ(0) = 0`.
pub fn bound_gap_curve(
    model: &TlpsModel,
    thetas: &[f64],
) -> Result<Vec<(f64, f64)>, ThresholdError> {
    let mut out = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let t = nphase_sojourn_linear(model, theta)?.t_total;
        let u = upper_bound(model, theta)?.t_total;
        out.push((theta, (u - t) / t));
    }
    Ok(out)
}
