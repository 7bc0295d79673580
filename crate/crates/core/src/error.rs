use thiserror::Error;

/// Errors raised by the filters, the special-function routines and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {value} is outside the domain")]
    Domain { function: &'static str, value: f64 },

    #[error(
        "digamma system did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("digamma system targets ({r1}, {r2}) are not attainable by any Beta distribution")]
    Infeasible { r1: f64, r2: f64 },

    #[error("observation {x} has zero density under every component")]
    DegenerateObservation { x: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid component label {0}")]
    InvalidLabel(usize),

    #[error("the component densities carry zero information about the weight")]
    ZeroInformation,

    #[error("quadrature failed to reach tolerance: estimate {estimate}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("enumeration over {n} observations exceeds the limit of {limit}")]
    TooManyObservations { n: usize, limit: usize },

    #[error("averaged matching equation gives non-positive mass {mass} (mean variance term {mean_x}, mean responsibility term {mean_y})")]
    NonPositiveMass { mass: f64, mean_x: f64, mean_y: f64 },

    #[error("grids do not match")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(function: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { function, value })
    }
}
