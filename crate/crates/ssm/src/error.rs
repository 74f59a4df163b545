use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    BadNumber {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("{path}: no data columns")]
    NoDataColumns { path: PathBuf },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: unsupported artifact format '{format}' version {version} (expected '{expected_format}' version {expected_version})")]
    ArtifactVersion {
        path: PathBuf,
        format: String,
        version: u32,
        expected_format: &'static str,
        expected_version: u32,
    },
    #[error("{path}: {message}")]
    Matrices { path: PathBuf, message: String },
    #[error("invalid arguments: {0}")]
    Config(String),
    #[error("unknown example '{0}' (expected linear_trend_gap, vehicle_tracking or consumption)")]
    UnknownExample(String),
    #[error(transparent)]
    Model(#[from] ssm_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
