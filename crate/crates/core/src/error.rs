use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{routine} did not converge within {sweeps} sweeps")]
    NoConvergence { routine: &'static str, sweeps: usize },

    #[error("singular system: pivot {pivot:e} in column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    /// A raw output for which the manifold mapping is undefined.
    #[error("degenerate {rep} output: {condition}")]
    Degenerate {
        rep: &'static str,
        condition: String,
    },

    #[error("degenerate 10d projection: S^T S = {0:e}")]
    DegenerateProjection(f64),

    #[error("no analytic tau_converge for {0} loss; supply tau explicitly")]
    NoAnalyticTau(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Why a vector could not be normalized.
pub(crate) fn norm_condition<T: std::fmt::Display + num_traits::Float>(norm: T) -> String {
    if norm.is_finite() {
        format!("norm {norm} <= 1e-8")
    } else {
        format!("norm {norm} is not finite")
    }
}
