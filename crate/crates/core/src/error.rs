use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument: dimension mismatch, non-finite value, degenerate configuration.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error(
        "degenerate skinning at vertex {vertex}: blended transform condition number {condition:e}"
    )]
    DegenerateSkinning { vertex: usize, condition: f64 },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("model invariant violated: {0}")]
    InvalidModel(String),

    #[error("parse error in {path} at {location}: {message}")]
    Parse {
        path: String,
        location: String,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
