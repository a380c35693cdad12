//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A single validation violation with the offending item named.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub item: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.item, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system specification:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("topology not supported by this operation: {0}")]
    Topology(String),

    #[error("steady-state solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("drift model is unstable (spectral abscissa {abscissa:.6e} rad/s)")]
    UnstableModel { abscissa: f64 },

    #[error("Lyapunov solve is ill-conditioned (condition estimate {cond_estimate:.3e})")]
    IllConditioned { cond_estimate: f64 },

    #[error("covariance dynamics diverged at t = {time:.6e} s (norm {norm:.3e})")]
    DynamicalInstability { time: f64, norm: f64 },

    #[error("covariance matrix is unphysical (min eig(V + i Omega/2) = {defect:.3e})")]
    UnphysicalCovariance { defect: f64 },

    #[error("frequency grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("coupling-rate grid too coarse (convergence estimate {estimate:.3e} above {limit:.3e})")]
    ShapeGridTooCoarse { estimate: f64, limit: f64 },

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    #[error("integrator step size underflow at t = {time:.6e} s; the problem appears stiff in this frame")]
    StepSizeUnderflow { time: f64 },

    #[error("amplitude runaway at t = {time:.6e} s (|amplitude| > {bound:.3e}); trajectory truncated")]
    Runaway { time: f64, bound: f64 },

    #[error("unknown scenario '{name}'; available: {}", available.join(", "))]
    UnknownScenario { name: String, available: Vec<String> },

    #[error("sweep failed at step {step} (parameter value {value:.6e}): {source}")]
    SweepStep {
        step: usize,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario '{scenario}': {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Violations carried by a validation error, if any.
    pub fn violations(&self) -> Option<&[Violation]> {
        match self {
            Error::Validation(v) => Some(v),
            _ => None,
        }
    }
}
