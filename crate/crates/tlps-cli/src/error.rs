//! CLI error taxonomy: every failure maps to one of three exit codes so
//! scripts can distinguish bad invocations (2) from numeric trouble (3)
//! and unstable models (4).

use std::fmt;
use tlps::analytic::AnalyticError;
use tlps::hyperexp::ModelError;
use tlps::simulate::SimError;
use tlps::threshold::ThresholdError;

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags, parameters, or I/O trouble.
    Spec(String),
    /// A solver, series, or grid failed to produce a value.
    Numeric(String),
    /// The requested model is overloaded (λ·m ≥ 1).
    Unstable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Unstable(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Spec(msg) | CliError::Numeric(msg) | CliError::Unstable(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Unstable { .. } => CliError::Unstable(e.to_string()),
            _ => CliError::Spec(e.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Model(m) => m.into(),
            // A bad --tol is an invocation problem, not a numeric one.
            AnalyticError::BadTolerance(_) | AnalyticError::PhaseCount { .. } => {
                CliError::Spec(e.to_string())
            }
            AnalyticError::Solve(_)
            | AnalyticError::NonConvergence { .. }
            | AnalyticError::BadGrid(_)
            | AnalyticError::GridTooCoarse { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ThresholdError> for CliError {
    fn from(e: ThresholdError) -> Self {
        match e {
            ThresholdError::Model(m) => m.into(),
            ThresholdError::Analytic(a) => a.into(),
            _ => CliError::Spec(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(m) => m.into(),
            SimError::TraceAudit { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Spec(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Spec(format!("I/O error: {e}"))
    }
}
