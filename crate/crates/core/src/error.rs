use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments that violate a precondition (shape mismatch,
    /// index out of range, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Invalid run configuration. `line` is 1-based when the error came from a
    /// config file.
    #[error("configuration error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },

    #[error("numeric error: {message} (norm {norm:e})")]
    Numeric { message: String, norm: f64 },

    #[error("singular matrix: pivot magnitude {pivot:e} at column {column}")]
    Singular { pivot: f64, column: usize },

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("ill-conditioned normalization: overlap magnitude {0:e}")]
    IllConditioned(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
