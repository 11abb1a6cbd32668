use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The run produced non-finite values or a degenerate raw output.
    #[error("numeric failure at iteration {iteration}: {detail}")]
    NumericAt { iteration: usize, detail: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Core(#[from] rotgrad_core::Error),
}

impl HarnessError {
    /// Whether the failure came from the numbers rather than the request.
    pub fn is_numeric(&self) -> bool {
        match self {
            HarnessError::NumericAt { .. } | HarnessError::Numeric(_) => true,
            HarnessError::Core(e) => !matches!(
                e,
                rotgrad_core::Error::InvalidParameter(_)
                    | rotgrad_core::Error::NoAnalyticTau(_)
                    | rotgrad_core::Error::Dimension(_)
            ),
            HarnessError::Config(_) | HarnessError::Shape(_) => false,
        }
    }
}
