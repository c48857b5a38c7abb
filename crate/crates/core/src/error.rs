use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid group structure: {0}")]
    InvalidGroup(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no analytic derivative available for this field")]
    NoAnalyticDerivative,

    /// The point lies where the evaluated object is not smooth (the origin or the center).
    #[error("point outside the smooth domain: {0}")]
    Domain(String),

    #[error("root finder failed to converge: {0}")]
    RootFinding(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// A structural hypothesis required by the operation does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
