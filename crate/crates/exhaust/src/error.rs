//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while loading data or running the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A binary scan file whose length is not a multiple of the record size.
    #[error("{path}: truncated scan file ({len} bytes is not a multiple of 16)")]
    TruncatedRecord { path: PathBuf, len: u64 },

    /// NaN or infinity encountered while reading point data.
    #[error("{path}: non-finite value in point {index}")]
    NonFinite { path: PathBuf, index: usize },

    /// A text or JSON input line that does not parse.
    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// A label buffer whose length does not match its scan.
    #[error("label data has {got} entries but the scan has {expected} points")]
    LabelLength { expected: usize, got: usize },

    /// Frames must be processed with strictly increasing time steps.
    #[error("non-monotonic time step: frame {next} follows frame {prev}")]
    NonMonotonicTime { prev: u32, next: u32 },

    #[error("invalid value for config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),

    /// Sequence directory fails validation (missing frames, gaps, ...).
    #[error("invalid sequence {dir}: {msg}")]
    Manifest { dir: PathBuf, msg: String },

    /// Grid extent and cell size that produce an empty grid.
    #[error("grid extent {extent} m with cell size {cell} m yields no cells")]
    EmptyGrid { extent: f64, cell: f64 },

    /// Pose rotation matrices must be orthonormal with determinant +1.
    #[error("pose rotation is not orthonormal (error {err:.2e})")]
    InvalidPose { err: f64 },

    /// Catch-all for argument validation.
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for usage/validation problems,
    /// 3 for I/O and corrupt-data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::TruncatedRecord { .. }
            | Error::NonFinite { .. }
            | Error::Malformed { .. }
            | Error::LabelLength { .. } => 3,
            _ => 2,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
