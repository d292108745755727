use thiserror::Error;

/// Failure modes shared across the crate. Every variant carries a
/// human-readable message; `kind` gives the stable machine-readable tag
/// that the harness writes into reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An interval whose induced index set on the grid is empty.
    #[error("degenerate interval: {0}")]
    DegenerateInterval(String),

    /// Malformed or non-finite sample data.
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A degeneracy plan whose bands are empty on the grid or overlap.
    #[error("plan invalid: {0}")]
    PlanInvalid(String),

    /// Input that fails a declared invariant (for example a process whose
    /// samples violate its own coincidence structure).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A recovery problem that is structurally inconsistent.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// A value outside the representable frequency or time range.
    #[error("range error: {0}")]
    RangeError(String),

    /// A stated precondition does not hold (for example a sampling stride
    /// at or above the admissible bound).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Full recovery requested on a structure whose relation graph does not
    /// connect every branch to the observed one.
    #[error("disconnected structure: {0}")]
    Disconnected(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable tag for serialized error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateInterval(_) => "degenerate-interval",
            Error::InvalidData(_) => "invalid-data",
            Error::GridMismatch(_) => "grid-mismatch",
            Error::PlanInvalid(_) => "plan-invalid",
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidProblem(_) => "invalid-problem",
            Error::RangeError(_) => "range-error",
            Error::Precondition(_) => "precondition",
            Error::Disconnected(_) => "disconnected",
            Error::Io { .. } => "io",
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
