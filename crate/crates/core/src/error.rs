use thiserror::Error;

/// Failures reported by the solvers and special-function kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what}: argument {value} outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("{what}: pole at {value}")]
    Pole { what: &'static str, value: f64 },

    #[error("{what}: no convergence after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("{what}: singular ({detail})")]
    Singular { what: &'static str, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("map is not monotone at z = {at}")]
    NonMonotoneMap { at: f64 },

    #[error("map range does not fit the domain of the outer map")]
    DomainMismatch,

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("badlands function at the {side} matching point is {ratio:e} of its peak (threshold {threshold:e})")]
    MatchingThreshold {
        side: &'static str,
        ratio: f64,
        threshold: f64,
    },

    #[error("scattering-length fit residual {residual:e} exceeds {threshold:e}")]
    FitResidual { residual: f64, threshold: f64 },

    #[error("potential table, line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("potential table: {0}")]
    TailMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
