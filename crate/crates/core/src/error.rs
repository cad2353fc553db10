use thiserror::Error;

#[derive(Debug, Error)]
pub enum BvError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("mollifier radius {eps} is below the resolvable limit {min} (2h)")]
    UnderResolved { eps: f64, min: f64 },

    #[error("field mask selects no cells")]
    EmptyMask,

    #[error("metric {metric} is not defined for {kind} fields")]
    MetricUnsupported {
        metric: &'static str,
        kind: &'static str,
    },

    #[error("boundary data is not a lifting of the field at cell {cell}")]
    BoundaryMismatch { cell: usize },

    #[error("relaxation did not converge after {iterations} sweeps (residual {residual:e})")]
    NonConvergent { iterations: usize, residual: f64 },

    #[error("embedding is not symmetric: |phi(n) - phi(-n)| = {gap:e}")]
    AsymmetricEmbedding { gap: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BvError>;
