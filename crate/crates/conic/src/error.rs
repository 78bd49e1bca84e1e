use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("problem exceeds size guard: total PSD side {side} > {limit}")]
    SizeGuard { side: usize, limit: usize },

    #[error("SDPA parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ConicError>;
