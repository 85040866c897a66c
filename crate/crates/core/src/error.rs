use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdpError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("eigen solver did not reach tolerance (best residual {residual:e})")]
    ConvergenceFailure { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("invalid parameters for gate {gate}: {reason}")]
    InvalidParams { gate: String, reason: String },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid measurement: {0}")]
    InvalidPovm(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("vectors are not neighbours: {0}")]
    NotNeighbors(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl QdpError {
    /// Stable machine-readable code, used in CLI error records.
    pub fn code(&self) -> &'static str {
        match self {
            QdpError::InvalidMatrix(_) => "InvalidMatrix",
            QdpError::ConvergenceFailure { .. } => "ConvergenceFailure",
            QdpError::DimensionMismatch { .. } => "DimensionMismatch",
            QdpError::UnknownGate(_) => "UnknownGate",
            QdpError::InvalidParams { .. } => "InvalidParams",
            QdpError::InvalidTarget(_) => "InvalidTarget",
            QdpError::InvalidProbability(_) => "InvalidProbability",
            QdpError::InvalidState(_) => "InvalidState",
            QdpError::InvalidChannel(_) => "InvalidChannel",
            QdpError::InvalidPovm(_) => "InvalidPovm",
            QdpError::ResourceLimit(_) => "ResourceLimit",
            QdpError::InvalidInput(_) => "InvalidInput",
            QdpError::NotNeighbors(_) => "NotNeighbors",
            QdpError::Parse(_) => "Parse",
            QdpError::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, QdpError>;
