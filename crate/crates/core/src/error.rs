use crate::mlmc::MlmcResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid estimator state: {0}")]
    State(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("enumeration needs {leaves} leaves but the budget is {budget}")]
    BudgetExceeded { leaves: u128, budget: u128 },

    /// The refinement loop hit its round cap. Carries whatever was sampled.
    #[error("no convergence after {rounds} refinement rounds")]
    NotConverged {
        rounds: usize,
        partial: Box<MlmcResult>,
    },

    #[error("non-finite sample value on level {level}")]
    NonFinite { level: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
