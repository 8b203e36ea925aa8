//! Shared flag groups and their resolution into library types.
//!
//! A model needs a distribution source — explicit `--phases` or the
//! power-law `--family` — plus rates: of `--mean`, `--lambda`, `--rho` any
//! two determine the third (with `--phases` the mean is inherent in the
//! distribution, so one rate flag suffices). Numeric flags accept plain
//! decimals or fractions like `10/11`. If redundant values are supplied
//! they must agree to within 1e-9 relative.

use crate::error::CliError;
use clap::Args;
use tlps::analytic::Method;
use tlps::hyperexp::{HyperExp, TlpsModel};
use tlps::threshold::default_theta_max;

/// Parse a decimal or an `a/b` fraction.
pub fn parse_number(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Spec(format!("cannot parse number '{s}'"));
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(CliError::Spec(format!("zero denominator in '{s}'")));
            }
            num / den
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if !v.is_finite() {
        return Err(CliError::Spec(format!("non-finite value '{s}'")));
    }
    Ok(v)
}

fn parse_opt(flag: &str, value: &Option<String>) -> Result<Option<f64>, CliError> {
    value
        .as_deref()
        .map(|s| {
            parse_number(s)
                .map_err(|e| CliError::Spec(format!("{flag}: {e}")))
        })
        .transpose()
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Job-size phases as weight:rate pairs, e.g. "10/11:1,1/11:0.1"
    #[arg(long, value_name = "W:R,...", conflicts_with = "family")]
    pub phases: Option<String>,
    /// Power-law phase family as N,gamma1,gamma2 (weights ∝ i^-gamma1,
    /// rates ∝ i^-gamma2; needs a mean via --mean or --lambda with --rho)
    #[arg(long, value_name = "N,G1,G2")]
    pub family: Option<String>,
    /// Mean job size (decimal or fraction)
    #[arg(long, value_name = "NUM")]
    pub mean: Option<String>,
    /// Arrival rate
    #[arg(long, value_name = "NUM")]
    pub lambda: Option<String>,
    /// Offered load (arrival rate × mean job size)
    #[arg(long, value_name = "NUM")]
    pub rho: Option<String>,
}

/// Optional (mean, lambda, rho) values as given on the command line.
pub type RateFlags = (Option<f64>, Option<f64>, Option<f64>);

impl ModelArgs {
    pub fn resolve(&self) -> Result<TlpsModel, CliError> {
        let mean = parse_opt("--mean", &self.mean)?;
        let lambda = parse_opt("--lambda", &self.lambda)?;
        let rho = parse_opt("--rho", &self.rho)?;
        let (dist, lam) = match (&self.phases, &self.family) {
            (Some(p), None) => {
                let dist = parse_phases(p)?;
                let (_, lam) = resolve_rates(Some(dist.mean()), mean, lambda, rho)?;
                (dist, lam)
            }
            (None, Some(f)) => {
                let (n, g1, g2) = parse_family(f)?;
                let (m, lam) = resolve_rates(None, mean, lambda, rho)?;
                (HyperExp::heavy_tail_family(n, g1, g2, m)?, lam)
            }
            _ => {
                return Err(CliError::Spec(
                    "exactly one of --phases or --family is required".into(),
                ))
            }
        };
        Ok(TlpsModel::new(dist, lam)?)
    }

    /// The parsed (mean, lambda, rho) flags without a distribution source.
    pub fn rate_flags(&self) -> Result<RateFlags, CliError> {
        Ok((
            parse_opt("--mean", &self.mean)?,
            parse_opt("--lambda", &self.lambda)?,
            parse_opt("--rho", &self.rho)?,
        ))
    }
}

/// Determine (mean, arrival rate) from whatever subset of sources is
/// present and check redundant specifications for agreement.
pub fn resolve_rates(
    inherent_mean: Option<f64>,
    mean_flag: Option<f64>,
    lambda: Option<f64>,
    rho: Option<f64>,
) -> Result<(f64, f64), CliError> {
    let derived = match (lambda, rho) {
        (Some(l), Some(r)) if l != 0.0 => Some(r / l),
        _ => None,
    };
    let m = inherent_mean
        .or(mean_flag)
        .or(derived)
        .ok_or_else(|| {
            CliError::Spec(
                "a mean job size is required: give --mean, or --lambda together with --rho"
                    .into(),
            )
        })?;
    if let Some(mv) = mean_flag {
        if (mv - m).abs() > 1e-9 * m.abs().max(1.0) {
            return Err(CliError::Spec(format!(
                "--mean {mv} disagrees with the model mean {m}"
            )));
        }
    }
    let lam = match (lambda, rho) {
        (Some(l), None) => l,
        (None, Some(r)) => r / m,
        (Some(l), Some(r)) => {
            if (l * m - r).abs() > 1e-9 * r.abs().max(1.0) {
                return Err(CliError::Spec(format!(
                    "--lambda {l} and --rho {r} disagree for mean {m}"
                )));
            }
            l
        }
        (None, None) => {
            return Err(CliError::Spec(
                "an arrival rate is required: give --lambda or --rho".into(),
            ))
        }
    };
    Ok((m, lam))
}

fn parse_phases(s: &str) -> Result<HyperExp, CliError> {
    let mut weights = Vec::new();
    let mut rates = Vec::new();
    for pair in s.split(',') {
        let (w, r) = pair.split_once(':').ok_or_else(|| {
            CliError::Spec(format!("--phases: expected weight:rate, got '{pair}'"))
        })?;
        weights.push(parse_number(w).map_err(|e| CliError::Spec(format!("--phases: {e}")))?);
        rates.push(parse_number(r).map_err(|e| CliError::Spec(format!("--phases: {e}")))?);
    }
    Ok(HyperExp::new(weights, rates)?)
}

fn parse_family(s: &str) -> Result<(usize, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Spec(format!(
            "--family: expected N,gamma1,gamma2, got '{s}'"
        )));
    }
    let n: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Spec(format!("--family: bad phase count '{}'", parts[0])))?;
    let g1 = parse_number(parts[1]).map_err(|e| CliError::Spec(format!("--family: {e}")))?;
    let g2 = parse_number(parts[2]).map_err(|e| CliError::Spec(format!("--family: {e}")))?;
    Ok((n, g1, g2))
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Smallest threshold of the grid
    #[arg(long, default_value_t = 0.0)]
    pub theta_min: f64,
    /// Largest threshold (default: 50/μ_min, where the PS limit is reached)
    #[arg(long)]
    pub theta_max: Option<f64>,
    /// Number of grid points
    #[arg(long, default_value_t = 201)]
    pub theta_steps: usize,
}

impl GridArgs {
    pub fn points(&self, model: &TlpsModel) -> Result<Vec<f64>, CliError> {
        let max = self.theta_max.unwrap_or_else(|| default_theta_max(model));
        if !(self.theta_min.is_finite() && max.is_finite() && 0.0 <= self.theta_min)
            || self.theta_min >= max
        {
            return Err(CliError::Spec(format!(
                "invalid threshold range [{}, {max}]",
                self.theta_min
            )));
        }
        if self.theta_steps < 2 {
            return Err(CliError::Spec(format!(
                "--theta-steps must be at least 2, got {}",
                self.theta_steps
            )));
        }
        let span = max - self.theta_min;
        Ok((0..self.theta_steps)
            .map(|k| self.theta_min + span * k as f64 / (self.theta_steps - 1) as f64)
            .collect())
    }
}

/// Analytic route selector for the curve command.
#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum MethodArg {
    Linear,
    Series,
    Bound,
    Twophase,
}

impl MethodArg {
    pub fn method(self) -> Method {
        match self {
            MethodArg::Linear => Method::Linear,
            MethodArg::Series => Method::Series,
            MethodArg::Bound => Method::Bound,
            MethodArg::Twophase => Method::TwoPhase,
        }
    }
}
