//! Experiments for projective manifold gradients: synthetic pose data, a
//! small MLP trainer, direct single-rotation fits, and a check suite.

pub mod checks;
pub mod config;
pub mod dataset;
pub mod error;
pub mod fit;
pub mod metrics;
pub mod nn;
pub mod oracle;
pub mod probe;
pub mod report;
pub mod rng;
pub mod train;
pub mod train_s2;

pub use config::{ExperimentConfig, LossSpec, RunSettings, S2Config, S2Method, TauSpec};
pub use error::{HarnessError, Result};
pub use fit::{fit_report, fit_single_rotation, FitConfig, FitInit, FitTrace};
pub use metrics::{compute_metrics, EvalRow};
pub use report::{MetricsReport, ReportKind};
pub use train::train;
pub use train_s2::train_s2;
