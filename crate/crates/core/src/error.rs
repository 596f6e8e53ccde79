use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the toolkit.
///
/// Variants are grouped by who is at fault: bad arguments or schemas (caller),
/// missing inputs (data), or a diverging optimization (numerical).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("numerical failure at step {step}: {detail}")]
    NumericalFailure { step: usize, detail: String },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("missing reference samples for label `{0}`")]
    MissingReference(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by missing or malformed input data rather than
    /// by configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MissingData(_)
                | Error::MissingReference(_)
                | Error::Io { .. }
                | Error::Codec(_)
                | Error::Schema(_)
        )
    }
}
