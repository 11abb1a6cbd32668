//! Step-size probe for losses without an analytic τ.
//!
//! For each candidate τ, reports the mean geodesic distance between the
//! current predictions and their goal rotations. A τ is usable when the
//! goals are close enough for the inverse projection to be meaningful.

use serde::{Deserialize, Serialize};

use rotgrad_core::riemannian::goal_for_loss;
use rotgrad_core::so3::geodesic_distance;
use rotgrad_core::{LossKind, Real, Rotation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub tau: f64,
    pub mean_goal_distance_deg: f64,
}

/// Four candidates per decade from 1e-3 to 1e3.
pub fn default_candidates() -> Vec<f64> {
    (-12..=12).map(|k| 10f64.powf(k as f64 / 4.0)).collect()
}

pub fn tau_probe<T: Real>(predictions: &[Rotation<T>], losses: &[LossKind<T>], candidates: &[f64]) -> Vec<ProbeRow> {
    candidates
        .iter()
        .map(|&tau| {
            let total: f64 = predictions
                .iter()
                .zip(losses)
                .map(|(r, l)| geodesic_distance(r, &goal_for_loss(l, r, T::c(tau))).to_f64_lossy())
                .sum();
            ProbeRow {
                tau,
                mean_goal_distance_deg: (total / predictions.len().max(1) as f64).to_degrees(),
            }
        })
        .collect()
}

/// Largest probed τ whose mean goal distance stays within `target_deg`.
pub fn select_tau(rows: &[ProbeRow], target_deg: f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.mean_goal_distance_deg <= target_deg)
        .map(|r| r.tau)
        .fold(None, |best, t| Some(best.map_or(t, |b: f64| b.max(t))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_probe_matches_closed_form() {
        // From θ = 90° about z, an L2 step of size τ turns by 4τ·sin θ = 4τ.
        let preds = vec![Rotation::<f64>::identity()];
        let losses = vec![LossKind::l2(Rotation::about_z(std::f64::consts::FRAC_PI_2))];
        let rows = tau_probe(&preds, &losses, &[0.01, 0.1, 0.2]);
        for r in &rows {
            assert!((r.mean_goal_distance_deg - (4.0 * r.tau).to_degrees()).abs() < 1e-9);
        }
        assert_eq!(select_tau(&rows, 25.0), Some(0.1));
        assert_eq!(select_tau(&rows, 1.0), None);
    }

    #[test]
    fn candidates_are_log_spaced() {
        let c = default_candidates();
        assert_eq!(c.len(), 25);
        assert!((c[0] - 1e-3).abs() < 1e-15 && (c[24] - 1e3).abs() < 1e-9);
    }
}
