use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: expected {expected}")]
    InvalidValue {
        key: String,
        value: String,
        expected: String,
    },
    #[error("{path}: line {line}: expected `key = value`")]
    Syntax { path: PathBuf, line: usize },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("seed list is empty")]
    NoSeeds,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: row {row}: {detail}")]
    Malformed {
        path: PathBuf,
        row: usize,
        detail: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] risfd_core::Error),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> SimError {
    let path = path.into();
    move |source| SimError::Io { path, source }
}

pub(crate) fn csv_err(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> SimError {
    let path = path.into();
    move |source| SimError::Csv { path, source }
}
