use thiserror::Error;

pub type Result<T> = std::result::Result<T, TnmError>;

#[derive(Debug, Error)]
pub enum TnmError {
    #[error("shape mismatch on axis `{axis}`: expected {expected}, got {got}")]
    Shape {
        axis: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("integration blew up at step {step}")]
    Integration { step: usize },

    #[error("insufficient data: need at least {needed} items, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("malformed document: {0}")]
    Deserialize(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
