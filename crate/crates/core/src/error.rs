use thiserror::Error;

/// Errors raised by field construction and the numerical diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid too small: {nx}x{ny} (need at least 4x4)")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("invalid grid spacing {0}")]
    InvalidSpacing(f64),

    #[error("jump traces violate the divergence-free trace condition: |eta.(m+ - m-)| = {residual:e}")]
    TraceCondition { residual: f64 },

    #[error("invalid field spec: {0}")]
    InvalidFieldSpec(String),

    #[error("mollifier scale {eps} below resolution threshold {min} (2 x spacing)")]
    UnresolvedKernel { eps: f64, min: f64 },

    #[error("grids differ")]
    GridMismatch,

    #[error("field value |m| = {norm} at cell ({i}, {j}) outside the entropy's domain")]
    OutsideDomain { i: usize, j: usize, norm: f64 },

    #[error("region is empty after masking")]
    EmptyRegion,

    #[error("{count} extension-dead cells (|m| < 1/2) inside the evaluation region")]
    DeadZone { count: usize },

    #[error("input field is not divergence-free: discrete L2 divergence {norm:e} > {tol:e}")]
    NotDivergenceFree { norm: f64, tol: f64 },

    #[error("test function support touches the boundary mask")]
    SupportOnBoundary,

    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("entropy is not in ENT: residual {0:e}")]
    NotAnEntropy(f64),

    #[error("field dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, Error>;
