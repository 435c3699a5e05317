use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bracket [{lo}, {hi}]: the cubic does not change sign")]
    InvalidBracket { lo: String, hi: String },

    #[error("x^3 + {c2}x^2 + {c1}x + {c0} has the rational root {root}")]
    Reducible { c0: i64, c1: i64, c2: i64, root: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("refused: {0}")]
    CostGuard(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
