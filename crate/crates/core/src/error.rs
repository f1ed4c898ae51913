use thiserror::Error;

/// Errors produced by the model, the exact engine, the sampler and the audits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice dimension must be positive")]
    ZeroDimension,

    #[error("volume with side {side} in d={d} overflows the index range")]
    VolumeOverflow { d: usize, side: u64 },

    #[error("site {site:?} has dimension {found}, expected {expected}")]
    SiteDimension {
        site: Vec<i32>,
        expected: usize,
        found: usize,
    },

    #[error("site {0:?} appears more than once")]
    DuplicateSite(Vec<i32>),

    #[error("volume must contain at least one site")]
    EmptyVolume,

    #[error("length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("pinned index {index} is not a site of a volume with {sites} sites")]
    NotSubset { index: usize, sites: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("volume has {sites} sites; exhaustive expansion is limited to {max} (use the sampler)")]
    VolumeTooLarge { sites: usize, max: usize },

    #[error("quadrature did not converge (local field {field}, neighbors {neighbors:?})")]
    Quadrature { field: f64, neighbors: Vec<f64> },

    #[error("rejection envelope violated at x={x} (log ratio {log_ratio}); curvature bound of the potential is wrong")]
    EnvelopeViolation { x: f64, log_ratio: f64 },

    #[error("{recorded} recorded sweeps cannot fill {batches} batches")]
    InsufficientSweeps { recorded: usize, batches: usize },

    #[error("operation requires gaussian disorder")]
    NonGaussianDisorder,

    #[error("operation requires a gaussian potential")]
    NonGaussianPotential,

    #[error("pinning audit requires epsilon > epsilon0 > 0 (got epsilon={epsilon}, epsilon0={epsilon0})")]
    EpsilonOrder { epsilon: f64, epsilon0: f64 },

    #[error("per-site constant did not stabilize: last two values {previous} and {last}")]
    ConstantsNotStabilized { previous: f64, last: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
