//! Geodesic-error statistics.

use serde::{Deserialize, Serialize};

use rotgrad_core::so3::geodesic_distance;
use rotgrad_core::{Real, Rotation};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean_deg: f64,
    pub median_deg: f64,
    /// Fraction of errors below 5°.
    pub acc5: f64,
    /// Fraction of errors below 3°.
    pub acc3: f64,
}

/// One evaluation of a run; also a row of the CSV trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub iteration: usize,
    pub mean_deg: f64,
    pub median_deg: f64,
    pub acc5: f64,
    pub acc3: f64,
    /// Mean norm of the raw network output.
    pub mean_norm: f64,
}

impl EvalRow {
    pub fn new(iteration: usize, s: ErrorSummary, mean_norm: f64) -> Self {
        Self {
            iteration,
            mean_deg: s.mean_deg,
            median_deg: s.median_deg,
            acc5: s.acc5,
            acc3: s.acc3,
            mean_norm,
        }
    }
}

/// Statistics of angular errors given in degrees. The median of an even
/// count is the lower of the two middle values.
pub fn summarize_errors(errors_deg: &[f64]) -> Result<ErrorSummary> {
    if errors_deg.is_empty() {
        return Err(HarnessError::Config("no errors to summarize".into()));
    }
    if errors_deg.iter().any(|e| !e.is_finite()) {
        return Err(HarnessError::Numeric("non-finite error".into()));
    }
    let n = errors_deg.len() as f64;
    let mut sorted = errors_deg.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ErrorSummary {
        mean_deg: errors_deg.iter().sum::<f64>() / n,
        median_deg: sorted[(sorted.len() - 1) / 2],
        acc5: errors_deg.iter().filter(|&&e| e < 5.0).count() as f64 / n,
        acc3: errors_deg.iter().filter(|&&e| e < 3.0).count() as f64 / n,
    })
}

pub fn compute_metrics<T: Real>(predictions: &[Rotation<T>], ground_truths: &[Rotation<T>]) -> Result<ErrorSummary> {
    if predictions.len() != ground_truths.len() {
        return Err(HarnessError::Shape(format!(
            "{} predictions for {} ground truths",
            predictions.len(),
            ground_truths.len()
        )));
    }
    let errs: Vec<f64> = predictions
        .iter()
        .zip(ground_truths)
        .map(|(p, g)| geodesic_distance(p, g).to_f64_lossy().to_degrees())
        .collect();
    summarize_errors(&errs)
}
