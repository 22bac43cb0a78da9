//! Crate-wide error type and exit-code mapping for the CLI.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{context}: mask must be binary")]
    NonBinaryMask { context: &'static str },

    #[error("kernel size must be odd and >= 1, got {0}")]
    EvenKernel(usize),

    #[error("window size must be odd and >= 1, got {0}")]
    EvenWindow(usize),

    #[error("sigma must be non-negative, got {0}")]
    NegativeSigma(f64),

    #[error("fill region leaves no known pixels")]
    AllUnknown,

    #[error("no instance covers at least {min_frac} of the image")]
    NoQualifyingInstance { min_frac: f64 },

    #[error("instance map is empty")]
    EmptyInstanceMap,

    #[error("depth map contains {0} non-finite values among valid pixels")]
    NonFiniteValues(usize),

    #[error("no valid pixel overlap between the two maps")]
    NoValidOverlap,

    #[error("dataset at {0} is empty")]
    EmptyDataset(PathBuf),

    #[error("{path}: malformed {format} header: {detail}")]
    MalformedHeader {
        format: &'static str,
        path: PathBuf,
        detail: String,
    },

    #[error("{path}: image dimensions overflow ({width}x{height})")]
    DimensionOverflow {
        path: PathBuf,
        width: u64,
        height: u64,
    },

    #[error("{path}: unsupported bit depth {bits}")]
    UnsupportedBitDepth { path: PathBuf, bits: u32 },

    #[error("checkpoint {path}: {detail}")]
    Checkpoint { path: PathBuf, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("backend '{backend}' failed on layer {layer}: {source}")]
    BackendFailure {
        backend: String,
        layer: u8,
        #[source]
        source: Box<Error>,
    },

    #[error("png: {0}")]
    PngCodec(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code contract: 0 success, 1 usage, 2 data error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Numeric(_)
            | Error::NonFiniteValues(_)
            | Error::NoValidOverlap
            | Error::AllUnknown => 3,
            _ => 2,
        }
    }
}
