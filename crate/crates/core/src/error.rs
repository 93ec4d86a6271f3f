/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input fell outside the domain of the requested operation.
    #[error("{name} must satisfy {constraint}, got {value}")]
    Domain {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },

    /// A correlation reached a point where the bivariate density degenerates.
    #[error("correlation structure is singular at rho = {rho}")]
    Singular { rho: f64 },

    /// The trivariate CDF is only implemented for the correlation structure
    /// it is actually used with (both cross-correlations 1/sqrt(2), third
    /// threshold zero).
    #[error("unsupported correlation structure: {0}")]
    UnsupportedStructure(&'static str),

    /// A forecaster who observes the entire source has nothing left to
    /// forecast; the conditional probability degenerates to an indicator.
    #[error("degenerate forecaster: observed measure equals the total measure")]
    DegenerateForecaster,

    /// Adaptive quadrature ran out of subdivisions before reaching tolerance.
    #[error(
        "quadrature did not converge: error estimate {err_estimate:e} \
         after {subdivisions} subdivisions"
    )]
    Convergence {
        err_estimate: f64,
        subdivisions: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
