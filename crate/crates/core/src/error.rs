use thiserror::Error;

/// Errors produced by the library.
///
/// Variants split into two families that the CLI maps onto distinct exit
/// codes: input validation problems and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown manifold kind `{0}`")]
    UnknownManifold(String),
    #[error("{n_bits} bits cannot be enumerated exactly (limit is {limit})")]
    TooManyBits { n_bits: usize, limit: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point {0:?} lies outside the parameter domain")]
    OutsideDomain(Vec<f64>),
    #[error("grid point {0} has no rows")]
    EmptyGridPoint(usize),
    #[error("grid point {point} has {rows} rows, need at least {needed}")]
    TooFewRows { point: usize, rows: usize, needed: usize },
    #[error("pair generation gave up after {0} consecutive rejections")]
    RejectionCap(usize),
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("differences have zero variance")]
    ZeroVariance,
    #[error("sample has zero probability at the requested parameter")]
    ZeroProbability,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteLoss { .. } | Error::ZeroVariance | Error::ZeroProbability
        )
    }

    /// Short machine-readable tag.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::UnknownManifold(_) => "unknown-manifold",
            Error::TooManyBits { .. } => "too-many-bits",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::OutsideDomain(_) => "outside-domain",
            Error::EmptyGridPoint(_) => "empty-grid-point",
            Error::TooFewRows { .. } => "too-few-rows",
            Error::RejectionCap(_) => "rejection-cap",
            Error::Mismatch(_) => "mismatch",
            Error::NonFiniteLoss { .. } => "non-finite-loss",
            Error::ZeroVariance => "zero-variance",
            Error::ZeroProbability => "zero-probability",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
