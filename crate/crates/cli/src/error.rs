use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigIo { path: PathBuf, source: std::io::Error },

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("unknown suite '{0}' (expected spectral, variance, concentration, pipeline or all)")]
    UnknownSuite(String),

    #[error("transport LP: {0}")]
    Lp(String),

    #[error(transparent)]
    Core(#[from] w2lab_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
