use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("smoothness exponent {0} outside (0, 2)")]
    InvalidSmoothness(f64),

    #[error("negative increment variance {0:e}: kernel is not positive semidefinite")]
    NotPositiveSemidefinite(f64),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("CDF inversion failed at level {0}")]
    CdfInversion(f64),

    #[error("sample budget N = {n} too small: component {component} would get a zero grid size")]
    BudgetTooSmall { n: f64, component: usize },

    #[error("point {0:?} lies outside the unit cube")]
    OutsideDomain(Vec<f64>),

    #[error("missing value at vertex {0:?}")]
    MissingVertexValue(Vec<usize>),

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("covariance factorization failed after jitter escalation to {0:e}")]
    Factorization(f64),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
