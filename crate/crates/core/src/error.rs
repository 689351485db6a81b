use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluation produced NaN at theta = {theta:?}")]
    Evaluation { theta: Vec<f64> },

    #[error("step leaves the domain along coordinate {coordinate}")]
    DomainViolation { coordinate: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("Laplace undefined: Hessian not positive definite")]
    LaplaceUndefined,

    #[error("optimizer did not converge (grad norm {grad_norm:e} after {iterations} iterations)")]
    NotConverged { grad_norm: f64, iterations: usize },

    #[error("stuck chain: check initialization/scale")]
    StuckChain,

    #[error("unsupported dimension {0}: only D <= 2 is supported")]
    UnsupportedDimension(usize),

    #[error("unbounded box: {0}")]
    UnboundedBox(String),

    #[error("grid too small: covers {covered:.6} of the limiting normal mass")]
    GridTooSmall { covered: f64 },

    #[error("insufficient components: k = {k} but need more than D = {dim}")]
    InsufficientComponents { k: usize, dim: usize },

    #[error("covariates linearly dependent: theta not identifiable")]
    RankDeficient,

    #[error("conditional spec has no valid joint: reduce |theta|")]
    InvalidJoint,

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn theta_f64<T: crate::Real>(theta: &[T]) -> Vec<f64> {
    theta.iter().map(|v| v.as_f64()).collect()
}
