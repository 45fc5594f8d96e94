//! Error type shared by every module of the laboratory.
//!
//! Each variant names the module that raised it so that command-line
//! front ends can emit module-tagged messages and pick an exit status.

use thiserror::Error;

/// Every failure the numerical pipeline can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Model parameters violate an invariant other than the exponent range.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The nonlinearity exponent lies outside the admissible window.
    #[error("ground_state: exponent p = {p} outside admissible range ({lo}, {hi}) for n = {n}")]
    InvalidExponent { n: usize, p: f64, lo: f64, hi: f64 },

    /// Bisection on the central value did not bracket a decaying solution.
    #[error("ground_state: shooting failed: {0}")]
    ShootingFailed(String),

    /// The Richardson estimate of a quadrature error exceeded tolerance.
    #[error("ground_state: quadrature unconverged (estimate {estimate:.3e} > tol {tol:.3e})")]
    QuadratureUnconverged { estimate: f64, tol: f64 },

    /// The requested chart radius reaches the focal set of the boundary.
    #[error("geometry: chart radius {radius} exceeds focal bound {focal}")]
    FocalRadiusExceeded { radius: f64, focal: f64 },

    /// Integration or Newton shooting of a boundary geodesic failed.
    #[error("geometry: geodesic shooting failed: {0}")]
    GeodesicShootingFailed(String),

    /// Two fields live on different grids.
    #[error("fields: grid mismatch ({0})")]
    GridMismatch(String),

    /// An operator would lose definiteness.
    #[error("fields: non-positive zeroth-order coefficient ({0})")]
    NonPositiveCoefficient(String),

    /// An iterative method exhausted its iteration budget.
    #[error("{module}: iteration limit {limit} reached (residual {residual:.3e})")]
    IterationLimit { module: &'static str, limit: usize, residual: f64 },

    /// The electrostatic potential left its a-priori box.
    #[error("electrostatics: bound violation: psi in [{min:.3e}, {max:.3e}] vs [0, {upper:.6}]")]
    BoundViolation { min: f64, max: f64, upper: f64 },

    /// The grid does not resolve the spike.
    #[error("reduction: grid spacing {spacing:.4e} exceeds eps/6 = {limit:.4e}")]
    ResolutionError { spacing: f64, limit: f64 },

    /// Kernel Gram matrix is numerically singular.
    #[error("reduction: degenerate kernel basis (Gram condition {0:.3e})")]
    DegenerateKernel(f64),

    /// The fixed-point map failed to contract.
    #[error("reduction: contraction diverged after {iterations} steps (ratio {ratio:.3})")]
    ContractionDiverged { iterations: usize, ratio: f64 },

    /// A fit was requested with too few samples.
    #[error("functional: insufficient samples ({got} < {need})")]
    InsufficientSamples { got: usize, need: usize },

    /// The peak search made no progress.
    #[error("functional: optimizer stalled: {0}")]
    OptimizerStalled(String),

    /// A finite-difference stencil point of the reduced gradient failed.
    #[error("functional: reduction failed at gradient stencil point: {0}")]
    NonConvergedAtNeighbor(String),

    /// Configuration text or value is invalid.
    #[error("config: {0}")]
    ConfigInvalid(String),

    /// Malformed binary or CSV data.
    #[error("format: {0}")]
    Format(String),

    /// Filesystem error (stringified so the error stays `Clone`).
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ConfigInvalid(_)
                | Error::InvalidParams(_)
                | Error::InvalidExponent { .. }
                | Error::FocalRadiusExceeded { .. }
                | Error::Format(_)
        )
    }
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;
