use thiserror::Error;

/// Errors shared by every layer of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("stencil out of range at node {node} (needs a {margin}-node interior margin)")]
    StencilOutOfRange { node: usize, margin: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bisection bracket failure ({0}); operator is not elliptic as declared")]
    BracketFailure(String),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("solver diverged: residual grew over {0} consecutive checks")]
    Divergence(usize),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
