//! Machine-readable run reports.

use serde::{Deserialize, Serialize};

use crate::metrics::EvalRow;
use crate::probe::ProbeRow;

/// Bumped whenever a field is renamed or removed.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 6] = ["iteration", "mean_deg", "median_deg", "acc5", "acc3", "mean_norm"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Fit,
    Train,
    TrainS2,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Samples skipped because their raw output had no manifold image.
    pub degenerate_samples: u64,
    /// S² samples whose target was the antipode of the prediction.
    pub antipodal_samples: u64,
    /// The constant τ chosen by the probe, if one ran.
    pub tau_selected: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probe: Vec<ProbeRow>,
    /// Why a direct fit stopped early.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub kind: ReportKind,
    pub config: serde_json::Value,
    pub evals: Vec<EvalRow>,
    #[serde(rename = "final")]
    pub final_row: EvalRow,
    pub initial_mean_norm: f64,
    /// Direct fits only: the last geodesic error in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_error_rad: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl MetricsReport {
    pub fn new(kind: ReportKind, config: serde_json::Value, evals: Vec<EvalRow>, diagnostics: Diagnostics) -> Self {
        let final_row = *evals.last().expect("reports hold at least the initial evaluation");
        let initial_mean_norm = evals[0].mean_norm;
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            kind,
            config,
            evals,
            final_row,
            initial_mean_norm,
            final_error_rad: None,
            diagnostics,
        }
    }

    /// The trace as CSV, header first.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in &self.evals {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iteration, r.mean_deg, r.median_deg, r.acc5, r.acc3, r.mean_norm
            ));
        }
        out
    }

    /// Final over initial mean raw-output norm.
    pub fn norm_ratio(&self) -> f64 {
        self.final_row.mean_norm / self.initial_mean_norm
    }
}
