use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("k = {k} must be smaller than the number of points ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("input contains a non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("point {0} has zero degree in the similarity graph")]
    IsolatedVertex(usize),
    #[error("eigensolver did not converge")]
    SolverFailure,
    #[error("q = {q} is outside the valid range [{min}, {max}]")]
    QOutOfRange { q: usize, min: usize, max: usize },
    #[error("k = {k} is outside the valid range [{min}, {max}]")]
    KOutOfRange { k: usize, min: usize, max: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("feature data is empty")]
    EmptyData,
    #[error("partition has a single cluster covering every point")]
    SingleCluster,
    #[error("point {0} has zero probability under every latent state")]
    NonFiniteLikelihood(usize),
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short name of the pipeline stage that produced this error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::KTooLarge { .. } | Error::NonFiniteInput { .. } | Error::IsolatedVertex(_) => {
                "graph"
            }
            Error::SolverFailure => "spectra",
            Error::QOutOfRange { .. } => "naive",
            Error::KOutOfRange { .. } => "baseline",
            Error::LengthMismatch { .. } => "partition",
            Error::EmptyData => "lcm",
            Error::SingleCluster | Error::NonFiniteLikelihood(_) => "ltm",
            Error::InvalidParameter { .. } | Error::InvalidInput(_) => "input",
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => "io",
        }
    }
}
