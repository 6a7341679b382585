use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid crop: {0}")]
    InvalidCrop(String),

    #[error("plane {width}x{height} is smaller than the required {min}x{min}")]
    PlaneTooSmall { width: usize, height: usize, min: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Laplacian scale must be positive, got {0}")]
    DegenerateScale(f64),

    #[error("{side} is not a resolution class (expected one of 128, 256, 512, 1024, 2048)")]
    UnknownClass { side: u32 },

    #[error("feature table line {line}: {msg}")]
    Schema { line: usize, msg: String },

    #[error("duplicate image_id {0:?}")]
    DuplicateId(String),

    #[error("invalid hyperparameters: {0}")]
    HyperParams(String),

    #[error("SMO did not converge after {iterations} iterations (KKT violation {violation:.3e})")]
    NotConverged { iterations: usize, violation: f64 },

    #[error("class {side} has {count} records, fewer than {folds} folds")]
    InsufficientFolds { side: u32, count: usize, folds: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("model file checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad input rather than by a failure of the
    /// computation itself. The CLI maps these to exit code 2.
    pub fn is_precondition(&self) -> bool {
        match self {
            Error::NotConverged { .. } => false,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            _ => true,
        }
    }
}
