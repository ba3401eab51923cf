use thiserror::Error;

use crate::gasket::BoundaryCondition;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chip counter overflow at vertex {vertex}")]
    Overflow { vertex: usize },

    #[error("configuration has {got} entries, graph has {expected} non-sink vertices")]
    LengthMismatch { expected: usize, got: usize },

    #[error("configuration belongs to level {config_level} ({config_boundary}), graph is level {graph_level} ({graph_boundary})")]
    GraphMismatch {
        config_level: u32,
        config_boundary: BoundaryCondition,
        graph_level: u32,
        graph_boundary: BoundaryCondition,
    },

    #[error("configuration is not stable at vertex {vertex}")]
    NotStable { vertex: usize },

    #[error("configuration is not recurrent")]
    NotRecurrent,

    #[error("vertex index {index} out of range for {len} vertices")]
    VertexOutOfRange { index: usize, len: usize },

    #[error("invalid level {level}: {reason}")]
    InvalidLevel { level: u32, reason: &'static str },

    #[error("operation requires normal boundary, got {0}")]
    RequiresNormalBoundary(BoundaryCondition),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("function is not multiplicative harmonic at vertex {vertex}")]
    NotHarmonic { vertex: usize },

    #[error("group order {order} exceeds the character enumeration cap {cap}")]
    CapExceeded { order: String, cap: u64 },

    #[error("matrix is singular")]
    Singular,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("cannot factor {0} by trial division below the prime cap")]
    FactorizationCap(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
