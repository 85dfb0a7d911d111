use std::path::PathBuf;

/// Errors produced anywhere in the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("blob length mismatch: manifest declares {expected} bytes, blob has {actual}")]
    BlobLength { expected: u64, actual: u64 },
    #[error("blob checksum mismatch: manifest {expected}, blob {actual}")]
    Checksum { expected: String, actual: String },
    #[error("non-finite value in item {item} at row {row}, column {col}")]
    NonFinite { item: usize, row: usize, col: usize },
    #[error("span violation in item {item}: {reason}")]
    SpanViolation { item: usize, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("label count {labels} does not match item count {items}")]
    LabelCount { labels: usize, items: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{modality} span is empty; fall back to mean pooling")]
    ModalityMissing { modality: &'static str },
    #[error("rank deficient input: {available} non-zero components, {requested} requested")]
    RankDeficient { available: usize, requested: usize },
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("clustering labelled every point as noise")]
    AllNoise,
    #[error("every grid point produced an undefined silhouette")]
    ExhaustedGrid,
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid constraint set: {0}")]
    Constraint(String),
    #[error("zero-norm vector cannot be normalised")]
    ZeroNorm,
    #[error("matrix not positive definite after ridge (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e})")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
