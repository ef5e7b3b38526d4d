use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// `S v` is exactly zero, so no basis vector can be formed from `v`.
    #[error("matrix-vector image is zero")]
    ZeroImage,

    #[error("atom {atom} is degenerate (zero image)")]
    DegenerateAtom { atom: usize },

    #[error("invalid partitioning: {partitions} partitions for {rows} rows")]
    InvalidPartitioning { partitions: usize, rows: usize },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("{}: bad magic bytes", path.display())]
    BadMagic { path: PathBuf },

    #[error("{}: unsupported format version {version}", path.display())]
    BadVersion { path: PathBuf, version: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("reference pattern has empty support")]
    EmptyReference,

    #[error("vector has zero variance")]
    ZeroVariance,

    #[error("no atom has nonzero variance")]
    NoEligibleAtom,
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
