use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank {rank} out of range for mode {mode} (extent {extent})")]
    RankOutOfRange {
        mode: usize,
        rank: usize,
        extent: usize,
    },

    #[error("aspect ratio {0} outside (0, 1]")]
    AspectRatio(f64),

    #[error("noise level must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("median-based threshold needs at least one singular value")]
    EmptySpectrum,

    #[error("SVD of a {rows}x{cols} matrix did not converge")]
    SvdNonConvergence { rows: usize, cols: usize },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
