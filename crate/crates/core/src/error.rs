use thiserror::Error;

#[derive(Debug, Error)]
pub enum TeshError {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical error: {0}")]
    Numeric(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Solver(#[from] tesh_conic::ConicError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TeshError>;
