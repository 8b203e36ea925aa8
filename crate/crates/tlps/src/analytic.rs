//! Expected sojourn time of the TLPS queue, by four analytic routes, plus
//! the conditional sojourn time of a job of given size via a Volterra solve.
//!
//! Every route starts from the same decomposition
//!
//! `T̄(θ) = (x1 + W̄·F̄(θ))/(1−ρ_θ) + T̄ᴮᴾˢ(θ)/(1−ρ_θ)`
//!
//! where the first term covers the time spent in the high-priority queue and
//! `T̄ᴮᴾˢ` is the mean response of the low-priority queue viewed as a PS
//! queue with batch arrivals. The routes differ in how they evaluate
//! `T̄ᴮᴾˢ`:
//!
//! * **two-phase** — closed form, exact for N = 2;
//! * **linear** — solve the N×N system `(I − M)·L* = (b/F̄)·f0`, then
//!   `L_i = L*_i + 1/(δρ·μ_i)` and `T̄ᴮᴾˢ = Σ F̄θⁱ·L_i`;
//! * **series** — sum `S = Σ_{k≥0} fᵀ(Mᵏ f0)`, the operator series whose
//!   fixed point is the linear system above; converges geometrically at rate
//!   bounded by `q < 1`;
//! * **bound** — the explicit majorant
//!   `Ῡ(θ) = first + (m−x1)/(1−ρ) + (b/F̄)/(1−ρ)·Σ_{i,j} F̄θⁱF̄θʲ/(μ_i+μ_j)`,
//!   which dominates `T̄(θ)` for every θ (with equality at N = 1 and θ = 0).
//!
//! The conditional sojourn time of a job of size `x` is
//! `x/(1−ρ_θ)` for `x ≤ θ` and `(W̄ + θ + α(x−θ))/(1−ρ_θ)` above the
//! threshold, where `α′` solves a Volterra integral equation of the second
//! kind that [`volterra_alpha`] marches with the trapezoidal rule.

use crate::hyperexp::{ModelError, TlpsModel, TruncatedStats};
use crate::linsolve::{solve, DenseMatrix, SolveError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("operation requires exactly {expected} phases, model has {got}")]
    PhaseCount { expected: usize, got: usize },
    #[error("tolerance {0} must be positive and finite")]
    BadTolerance(f64),
    #[error("series did not converge within {iterations} iterations (contraction violated)")]
    NonConvergence { iterations: usize },
    #[error("grid parameter {0} must be positive and finite")]
    BadGrid(f64),
    #[error(
        "consistency defect {defect:.3e} exceeds tolerance {tol:.3e}: \
         grid too coarse or domain too short (reduce the step or extend x_max)"
    )]
    GridTooCoarse { defect: f64, tol: f64 },
}

/// Which analytic route produced a [`SojournBreakdown`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TwoPhase,
    Linear,
    Series,
    Bound,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::TwoPhase => "twophase",
            Method::Linear => "linear",
            Method::Series => "series",
            Method::Bound => "bound",
        }
    }
}

/// A computed mean sojourn time together with its decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SojournBreakdown {
    /// Threshold the value was computed at.
    pub theta: f64,
    /// Total mean sojourn time `T̄(θ)` (for [`Method::Bound`], the majorant).
    pub t_total: f64,
    /// Low-priority (batch PS) contribution `T̄ᴮᴾˢ(θ)`.
    pub t_bps: f64,
    /// High-priority contribution `(x1 + W̄·F̄(θ))/(1−ρ_θ)`.
    pub first_term: f64,
    /// Route that produced the value.
    pub method: Method,
    /// Set when θ is so large that every tail component underflows; the PS
    /// limit `m/(1−ρ)` is returned instead of dividing underflowed masses.
    pub degenerate: bool,
    /// Number of series terms accumulated ([`Method::Series`] only).
    pub series_iterations: Option<usize>,
}

/// The finite-dimensional representation of the low-priority-queue operator:
/// matrix action on Laplace-value vectors at the phase rates, plus the
/// forcing vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    /// `M[p][i] = γF̄θⁱ/(μ_p+μ_i) + δ_pi·γΣ_j F̄θʲ/(μ_p+μ_j)`.
    pub m_matrix: DenseMatrix,
    /// `f0[p] = Σ_i F̄θⁱ/(μ_p+μ_i)`.
    pub f0: Vec<f64>,
    /// `f[j] = F̄θʲ`.
    pub f: Vec<f64>,
}

impl OperatorMatrix {
    pub fn build(stats: &TruncatedStats) -> Self {
        let n = stats.rates().len();
        let rates = stats.rates();
        let tails = &stats.tail_components;
        let mut m_matrix = DenseMatrix::zeros(n);
        let mut f0 = vec![0.0; n];
        for p in 0..n {
            let mu_p = rates[p];
            let mut row_sum = 0.0;
            for i in 0..n {
                let w = tails[i] / (mu_p + rates[i]);
                m_matrix.set(p, i, stats.gamma * w);
                row_sum += w;
            }
            f0[p] = row_sum;
            m_matrix.set(p, p, m_matrix.at(p, p) + stats.gamma * row_sum);
        }
        Self {
            m_matrix,
            f0,
            f: tails.clone(),
        }
    }
}

/// Mean sojourn time of the plain PS queue, `m/(1−ρ)` — also `T̄(0)` and the
/// θ → ∞ limit of `T̄(θ)`.
pub fn ps_sojourn(model: &TlpsModel) -> f64 {
    model.mean_job_size() / (1.0 - model.load())
}

fn first_term(stats: &TruncatedStats) -> f64 {
    (stats.x1 + stats.w_bar * stats.ccdf_at_theta) / (1.0 - stats.rho_theta)
}

/// All tail mass underflowed: report the PS limit with the degenerate flag
/// instead of dividing quantities that are exactly zero.
fn degenerate_breakdown(model: &TlpsModel, theta: f64, method: Method) -> SojournBreakdown {
    let ps = ps_sojourn(model);
    SojournBreakdown {
        theta,
        t_total: ps,
        t_bps: 0.0,
        first_term: ps,
        method,
        degenerate: true,
        series_iterations: None,
    }
}

/// Solve the linear system for the per-phase Laplace values
/// `L_i = L_{α′}(μ_i)` of the batch-queue delay derivative.
fn solve_l(stats: &TruncatedStats) -> Result<Vec<f64>, AnalyticError> {
    let op = OperatorMatrix::build(stats);
    let n = stats.rates().len();
    let mut a = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, a.at(i, j) - op.m_matrix.at(i, j));
        }
    }
    let rhs: Vec<f64> = op.f0.iter().map(|v| stats.b_over_f * v).collect();
    let l_star = solve(&a, &rhs)?;
    Ok(l_star
        .iter()
        .zip(stats.rates())
        .map(|(ls, mu)| ls + 1.0 / (stats.delta_rho * mu))
        .collect())
}

/// Closed-form mean sojourn time for two-phase hyper-exponential sizes.
pub fn two_phase_sojourn(model: &TlpsModel, theta: f64) -> Result<SojournBreakdown, AnalyticError> {
    let n = model.dist().num_phases();
    if n != 2 {
        return Err(AnalyticError::PhaseCount { expected: 2, got: n });
    }
    let stats = model.truncated_stats(theta)?;
    if stats.ccdf_at_theta == 0.0 {
        return Ok(degenerate_breakdown(model, theta, Method::TwoPhase));
    }
    let (mu1, mu2) = (model.dist().rates()[0], model.dist().rates()[1]);
    let m = model.mean_job_size();
    let rho = model.load();
    let f = stats.ccdf_at_theta;
    let tail_mean = m - stats.x1; // Σ F̄θⁱ/μ_i
    let denom = mu1 + mu2 - stats.gamma * f;
    debug_assert!(denom > 0.0, "two-phase denominator must stay positive");
    let quad = mu1 * mu2 * tail_mean * tail_mean + stats.delta_rho * f * f;
    let t_bps = (1.0 - stats.rho_theta)
        * (tail_mean / (1.0 - rho) + stats.b_over_f * quad / (2.0 * (1.0 - rho) * denom));
    let first = first_term(&stats);
    Ok(SojournBreakdown {
        theta,
        t_total: first + t_bps / (1.0 - stats.rho_theta),
        t_bps,
        first_term: first,
        method: Method::TwoPhase,
        degenerate: false,
        series_iterations: None,
    })
}

/// Mean sojourn time via the N-phase linear system.
pub fn nphase_sojourn_linear(
    model: &TlpsModel,
    theta: f64,
) -> Result<SojournBreakdown, AnalyticError> {
    let stats = model.truncated_stats(theta)?;
    if stats.ccdf_at_theta == 0.0 {
        return Ok(degenerate_breakdown(model, theta, Method::Linear));
    }
    let l = solve_l(&stats)?;
    let t_bps: f64 = stats
        .tail_components
        .iter()
        .zip(&l)
        .map(|(f, li)| f * li)
        .sum();
    let first = first_term(&stats);
    Ok(SojournBreakdown {
        theta,
        t_total: first + t_bps / (1.0 - stats.rho_theta),
        t_bps,
        first_term: first,
        method: Method::Linear,
        degenerate: false,
        series_iterations: None,
    })
}

/// Mean sojourn time via the operator series `S = Σ_k fᵀ(Mᵏ f0)`.
///
/// Terms decay geometrically at rate bounded by the contraction ratio `q`;
/// accumulation stops when the latest term drops below `tol·|S|`, with a hard
/// iteration cap derived from `q` (exceeding it indicates a bug, not slow
/// convergence).
pub fn nphase_sojourn_series(
    model: &TlpsModel,
    theta: f64,
    tol: f64,
) -> Result<SojournBreakdown, AnalyticError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(AnalyticError::BadTolerance(tol));
    }
    let stats = model.truncated_stats(theta)?;
    if stats.ccdf_at_theta == 0.0 {
        return Ok(degenerate_breakdown(model, theta, Method::Series));
    }
    let m = model.mean_job_size();
    let rho = model.load();
    let one_minus = 1.0 - stats.rho_theta;

    let (series_sum, iterations) = if stats.b_over_f == 0.0 {
        // θ = 0: no extra batch arrivals, the series contributes nothing.
        (0.0, 0)
    } else {
        let op = OperatorMatrix::build(&stats);
        let cap = if stats.q > 0.0 && stats.q < 1.0 {
            (tol.ln() / stats.q.ln()).ceil().max(0.0) as usize + 64
        } else {
            64
        };
        let mut v = op.f0.clone();
        let mut sum = 0.0;
        let mut iterations = 0usize;
        loop {
            let term: f64 = op.f.iter().zip(&v).map(|(f, vi)| f * vi).sum();
            sum += term;
            iterations += 1;
            if term.abs() <= tol * sum.abs() {
                break;
            }
            if iterations > cap {
                return Err(AnalyticError::NonConvergence { iterations });
            }
            v = op.m_matrix.mat_vec(&v);
        }
        (sum, iterations)
    };

    let t_bps = (m - stats.x1) * one_minus / (1.0 - rho) + stats.b_over_f * series_sum;
    let first = first_term(&stats);
    Ok(SojournBreakdown {
        theta,
        t_total: first + t_bps / one_minus,
        t_bps,
        first_term: first,
        method: Method::Series,
        degenerate: false,
        series_iterations: Some(iterations),
    })
}

/// The closed-form upper bound `Ῡ(θ) ≥ T̄(θ)`.
pub fn upper_bound(model: &TlpsModel, theta: f64) -> Result<SojournBreakdown, AnalyticError> {
    let stats = model.truncated_stats(theta)?;
    if stats.ccdf_at_theta == 0.0 {
        return Ok(degenerate_breakdown(model, theta, Method::Bound));
    }
    let m = model.mean_job_size();
    let rho = model.load();
    let rates = stats.rates();
    let tails = &stats.tail_components;
    let mut cross = 0.0;
    for (i, &fi) in tails.iter().enumerate() {
        for (j, &fj) in tails.iter().enumerate() {
            cross += fi * fj / (rates[i] + rates[j]);
        }
    }
    let t_bps =
        (1.0 - stats.rho_theta) / (1.0 - rho) * ((m - stats.x1) + stats.b_over_f * cross);
    let first = first_term(&stats);
    Ok(SojournBreakdown {
        theta,
        t_total: first + t_bps / (1.0 - stats.rho_theta),
        t_bps,
        first_term: first,
        method: Method::Bound,
        degenerate: false,
        series_iterations: None,
    })
}

/// The delay function of the low-priority queue on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraSolution {
    /// Grid step `h`; node `j` sits at `x = j·h`.
    pub grid_step: f64,
    /// `α′` at the grid nodes (≥ 1 everywhere).
    pub alpha_prime: Vec<f64>,
    /// `α` by cumulative trapezoid, `α(0) = 0`, nondecreasing.
    pub alpha: Vec<f64>,
    /// Per-phase Laplace values `L_i = L_{α′}(μ_i)` from the linear solve
    /// (used to fold the infinite-domain part of the kernel into the
    /// forcing term).
    pub l_values: Vec<f64>,
    /// Relative defect of the internal consistency audit: the Φ₂ quadrature
    /// of the computed `α′` against `Σ F̄θⁱL_i` from the linear solve.
    /// Shrinks as O(h²).
    pub consistency_defect: f64,
}

impl VolterraSolution {
    /// Linear interpolation of `α` (clamped to the grid range).
    pub fn alpha_at(&self, x: f64) -> f64 {
        let h = self.grid_step;
        if x <= 0.0 {
            return 0.0;
        }
        let last = self.alpha.len() - 1;
        let pos = x / h;
        let j = (pos.floor() as usize).min(last - 1);
        let frac = (pos - j as f64).clamp(0.0, 1.0);
        self.alpha[j] + frac * (self.alpha[j + 1] - self.alpha[j])
    }
}

/// Default Volterra step: resolve the fastest phase and the threshold scale,
/// `h = min(1/μ_max, θ+1)/100`.
pub fn default_grid_step(model: &TlpsModel, theta: f64) -> f64 {
    (1.0 / model.dist().max_rate()).min(theta + 1.0) / 100.0
}

/// Default Volterra domain: `40/μ_min`, beyond which every kernel component
/// has decayed below 4e-18.
pub fn default_x_max(model: &TlpsModel) -> f64 {
    40.0 / model.dist().min_rate()
}

/// March the delay-derivative equation
///
/// `α′(x) = g(x) + γ ∫₀ˣ α′(y) F̄(x−y+θ) dy`,
/// `g(x) = 1 + (b/F̄)·F̄(x+θ) + γ Σ_i F̄θⁱ L_i e^{−μ_i x}`
///
/// on a uniform grid with the trapezoidal rule. The `L_i` term is the
/// infinite-domain part `γ∫₀^∞ α′(y)F̄(x+y+θ)dy` of the original fixed-point
/// equation, evaluated exactly through the Laplace values of the linear
/// solve. The per-phase exponential structure of the kernel lets the
/// convolution update run in O(N) per node.
///
/// After the march, the Φ₂ quadrature of the computed `α′` is audited
/// against the linear-solve value `T̄ᴮᴾˢ = Σ F̄θⁱL_i` (with a
/// constant-extrapolation correction for the tail beyond `x_max`); the
/// defect must stay within `max(1e-4, 4·Ê)` where `Ê` is the a-posteriori
/// trapezoid error estimate from second differences of the integrand.
pub fn volterra_alpha(
    model: &TlpsModel,
    theta: f64,
    x_max: f64,
    grid_step: f64,
) -> Result<VolterraSolution, AnalyticError> {
    if !x_max.is_finite() || x_max <= 0.0 {
        return Err(AnalyticError::BadGrid(x_max));
    }
    if !grid_step.is_finite() || grid_step <= 0.0 || grid_step > x_max {
        return Err(AnalyticError::BadGrid(grid_step));
    }
    let stats = model.truncated_stats(theta)?;
    if stats.ccdf_at_theta == 0.0 {
        return Err(AnalyticError::Model(ModelError::DegenerateThreshold));
    }
    let l = solve_l(&stats)?;
    let rates = stats.rates().to_vec();
    let tails = stats.tail_components.clone();
    let n_phases = rates.len();
    let h = grid_step;
    let n = (x_max / h).ceil() as usize;
    let gamma = stats.gamma;
    let f_theta = stats.ccdf_at_theta;

    // Forcing g at node j; Σ_i F̄θⁱ e^{−μ_i x}·(b/F̄ + γL_i) folds both decay
    // terms into one pass.
    let coeff: Vec<f64> = l.iter().map(|li| stats.b_over_f + gamma * li).collect();
    let decay: Vec<f64> = rates.iter().map(|mu| (-mu * h).exp()).collect();
    let g_at = |j: usize| -> f64 {
        let x = j as f64 * h;
        1.0 + tails
            .iter()
            .zip(&rates)
            .zip(&coeff)
            .map(|((f, mu), c)| f * (-mu * x).exp() * c)
            .sum::<f64>()
    };

    // Trapezoidal marching. The running per-phase sums
    // `u[i] = Σ_{k≤j} α′_k e^{−μ_i(x_j−x_k)}` turn the convolution
    // `Σ_k w_k α′_k F̄(x_j−x_k+θ)` into an O(N) update per node: the k = j
    // term (weight h/2) moves to the left-hand side as the diagonal factor.
    let diag = 1.0 - gamma * h * f_theta / 2.0;
    let mut alpha_prime = Vec::with_capacity(n + 1);
    alpha_prime.push(g_at(0));
    let mut u = vec![alpha_prime[0]; n_phases];
    for j in 1..=n {
        let x_j = j as f64 * h;
        let mut conv = 0.0;
        for i in 0..n_phases {
            u[i] *= decay[i];
            // Full weight h on interior nodes, h/2 on node 0.
            conv += tails[i] * (h * u[i] - 0.5 * h * (-rates[i] * x_j).exp() * alpha_prime[0]);
        }
        let a_j = (g_at(j) + gamma * conv) / diag;
        alpha_prime.push(a_j);
        for ui in &mut u {
            *ui += a_j;
        }
    }

    // Cumulative trapezoid for α.
    let mut alpha = Vec::with_capacity(n + 1);
    alpha.push(0.0);
    for j in 1..=n {
        alpha.push(alpha[j - 1] + 0.5 * h * (alpha_prime[j - 1] + alpha_prime[j]));
    }

    // Consistency audit: Φ₂ quadrature of α′ vs the linear-solve value.
    let weight = |j: usize| if j == 0 || j == n { 0.5 * h } else { h };
    let integrand = |j: usize| -> f64 {
        let x = j as f64 * h;
        alpha_prime[j]
            * tails
                .iter()
                .zip(&rates)
                .map(|(f, mu)| f * (-mu * x).exp())
                .sum::<f64>()
    };
    let mut phi2_march = 0.0;
    let mut prev2 = integrand(0);
    let mut prev1 = integrand(1);
    phi2_march += weight(0) * prev2 + weight(1) * prev1;
    let mut second_diff_sum = 0.0;
    for j in 2..=n {
        let cur = integrand(j);
        phi2_march += weight(j) * cur;
        second_diff_sum += (prev2 - 2.0 * prev1 + cur).abs();
        prev2 = prev1;
        prev1 = cur;
    }
    // Constant-extrapolation tail beyond x_max.
    let tail_correction: f64 = alpha_prime[n]
        * tails
            .iter()
            .zip(&rates)
            .map(|(f, mu)| f * (-mu * x_max).exp() / mu)
            .sum::<f64>();
    let reference: f64 = tails.iter().zip(&l).map(|(f, li)| f * li).sum();
    let defect = ((phi2_march + tail_correction) - reference).abs() / reference;
    let error_estimate = h / 12.0 * second_diff_sum / reference;
    let tol = (4.0 * error_estimate).max(1e-4);
    // A NaN defect (overflowed march) must fail the audit, not slip past it.
    if defect.is_nan() || defect > tol {
        return Err(AnalyticError::GridTooCoarse { defect, tol });
    }

    Ok(VolterraSolution {
        grid_step: h,
        alpha_prime,
        alpha,
        l_values: l,
        consistency_defect: defect,
    })
}

/// Mean sojourn time of a job of size `x`:
/// `x/(1−ρ_θ)` for `x ≤ θ`, else `(W̄ + θ + α(x−θ))/(1−ρ_θ)`.
pub fn conditional_sojourn(
    model: &TlpsModel,
    theta: f64,
    x: f64,
    grid_step: f64,
) -> Result<f64, AnalyticError> {
    if !x.is_finite() || x < 0.0 {
        return Err(AnalyticError::BadGrid(x));
    }
    let stats = model.truncated_stats(theta)?;
    if x <= theta {
        return Ok(x / (1.0 - stats.rho_theta));
    }
    // Solve on a domain covering both the queried point and the full decay
    // range, so the internal consistency audit stays meaningful.
    let x_max = default_x_max(model).max(x - theta + grid_step);
    let vol = volterra_alpha(model, theta, x_max, grid_step)?;
    Ok((stats.w_bar + theta + vol.alpha_at(x - theta)) / (1.0 - stats.rho_theta))
}
