use crate::graph::VertexId;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown vertex {0}")]
    InvalidVertex(VertexId),

    #[error("malformed graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch at {vertex}: expected {expected}, got {got}")]
    DimensionMismatch {
        vertex: VertexId,
        expected: usize,
        got: usize,
    },

    #[error("endomorphism at {vertex} is not Hermitian (defect {defect:.3e})")]
    NonHermitian { vertex: VertexId, defect: f64 },

    #[error("field has a non-scalar fiber at {0}")]
    NonScalarFiber(VertexId),

    #[error("kernel search requires a nonempty support")]
    EmptySupport,

    #[error("solve window is empty")]
    EmptyWindow,

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("field supported outside the truncated star: {0}")]
    SupportOutsideStar(VertexId),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}
