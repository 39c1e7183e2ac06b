use thiserror::Error;

/// Errors raised while validating data, configuring a fit, or reading and
/// writing artifacts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("record {index}: zero-length exposure (entry {entry} >= exit {exit})")]
    ZeroLengthExposure { index: usize, entry: f64, exit: f64 },

    #[error("record {index}: {message}")]
    InvalidRecord { index: usize, message: String },

    #[error("record {index}: expected {expected} covariates, found {found}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("record {index}: covariate {dim} value {value} outside domain [{lo}, {hi}]")]
    CovariateOutOfDomain {
        index: usize,
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("point outside the estimation domain in dimension {dim}: {value} not in [{lo}, {hi}]")]
    OutsideDomain { dim: usize, value: f64, lo: f64, hi: f64 },

    #[error("full-grid pilot refused: {0}")]
    BudgetExceeded(String),

    #[error("singular normal equations: dimension {dim} has no exposure at node {node}")]
    SingularSystem { dim: usize, node: usize },

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
