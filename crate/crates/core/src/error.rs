use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("target class {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("gradient check refused: {count} parameters exceeds the limit of {limit}")]
    TooManyParameters { count: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: duplicate image path {path:?}")]
    DuplicatePath { line: usize, path: String },

    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported PGM maxval {0} (must be 1..=255)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u16),
    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("mean filter size {0} is even")]
    EvenFilterSize(usize),
    #[error("filter size {size} too large for a {height}x{width} image")]
    FilterTooLarge { size: usize, height: usize, width: usize },

    #[error("need at least {needed} distinct subjects, found {found}")]
    TooFewSubjects { needed: usize, found: usize },
    #[error("expected {expected} folds, got {found}")]
    WrongFoldCount { expected: usize, found: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
