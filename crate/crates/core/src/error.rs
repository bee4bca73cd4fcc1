use thiserror::Error;

/// Errors produced by the clustering, solver and certificate routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid block model: {0}")]
    InvalidModel(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("eigendecomposition did not converge")]
    Eigendecomposition,

    #[error("degenerate clustering matrix: trace {0} is not above 0.5")]
    DegenerateTrace(f64),

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("none of the {0} grid points converged")]
    NoConvergedGridPoint(usize),

    #[error("k-means found only {found} distinct clusters, {requested} requested")]
    DegenerateClustering { found: usize, requested: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
