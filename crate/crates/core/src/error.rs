use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("integration step failed: {0}")]
    StepFailure(String),

    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("schema violation in {file}: {message}")]
    Schema { file: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors that stem from user-supplied configuration or input
    /// files, as opposed to failures during a run.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Schema { .. }
                | Error::EmptyData(_)
                | Error::InvalidInput(_)
        )
    }
}
