use thiserror::Error;

/// Errors raised anywhere in the lab.
///
/// The CLI maps [`LabError::Config`] and [`LabError::Catalog`] to exit code 2
/// and everything else to exit code 3.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("input domain error: {0}")]
    InputDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate levels {lower} and {upper} at s = {s}: gap {gap:e} below threshold {threshold:e}")]
    Degeneracy {
        s: f64,
        lower: usize,
        upper: usize,
        gap: f64,
        threshold: f64,
    },

    #[error("level tracking failed at s = {s}: {reason}")]
    Tracking { s: f64, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("oracle verification failed: {0}")]
    Oracle(String),

    #[error("unknown model `{name}`; available: {available}")]
    Catalog { name: String, available: String },

    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("sweep member T = {t} failed: {source}")]
    Sweep {
        t: f64,
        #[source]
        source: Box<LabError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        LabError::Config {
            line,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } | LabError::Catalog { .. } => 2,
            LabError::Sweep { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
