use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A query or sampling window does not fit the grid.
    #[error("geometry: {0}")]
    Geometry(String),

    /// The mollifier cannot be resolved at the grid spacing.
    #[error("resolution: eps = {eps} is below twice the mesh spacing {delta}")]
    Resolution { eps: f64, delta: f64 },

    /// An operation was applied to a field in the wrong state.
    #[error("state: {0}")]
    State(String),

    /// Invalid numeric input (non-finite values, wrong lengths, empty samples).
    #[error("data: {0}")]
    Data(String),

    /// `exp(xi * h)` would overflow at a grid node.
    #[error("range: |xi * h| = {exponent} exceeds 700 at node ({ix}, {iy})")]
    Overflow { ix: usize, iy: usize, exponent: f64 },

    /// A parameter lies outside the domain of an analytic formula.
    #[error("domain: {0}")]
    Domain(String),

    #[error("replica {index}: {source}")]
    Replica {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable short tag used as a prefix by front ends.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "geometry",
            Error::Resolution { .. } => "resolution",
            Error::State(_) => "state",
            Error::Data(_) => "data",
            Error::Overflow { .. } => "range",
            Error::Domain(_) => "domain",
            Error::Replica { source, .. } => source.tag(),
            Error::Format(_) => "format",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors raised while decoding cache files and reports.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("magic mismatch: expected \"LFPPFLD1\", found {found:?}")]
    MagicMismatch { found: [u8; 8] },

    #[error("unsupported version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("length mismatch: expected {expected} bytes, found {actual}")]
    Length { expected: u64, actual: u64 },

    #[error("invalid header: {0}")]
    Header(String),

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
}
