use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Every candidate has zero selection weight.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rescaled curves share no usable support")]
    NoOverlap,

    #[error("curve never crosses 1/2")]
    NotBracketed,

    /// `line` is 1-based; 0 when the problem is not tied to a line.
    #[error("{}", config_message(*line, message))]
    Config { line: usize, message: String },

    #[error("every realization failed to reach the quasi-stationary state ({excluded} excluded)")]
    NoConvergedRealizations { excluded: usize },

    #[error("{} already holds a manifest; pass --force to overwrite", .0.display())]
    OutputExists(std::path::PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn config_message(line: usize, message: &str) -> String {
    if line == 0 {
        format!("config: {message}")
    } else {
        format!("config line {line}: {message}")
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}
