//! Direct optimization of a single raw output, without a network.

use serde::{Deserialize, Serialize};

use rotgrad_core::riemannian::{tau_converge_for, tau_gt};
use rotgrad_core::so3::{geodesic_distance, sample_uniform_rotation};
use rotgrad_core::{
    baseline_rotation, representation_map, rpmg_gradient, LossKind, Method, RawOutput, RepKind, Rotation, RpmgParams,
    TauSchedule,
};

use crate::config::{check_lambda, LossSpec, TauSpec, AUTO_TAU_INIT, AUTO_TAU_STEPS, DEFAULT_POINTS};
use crate::dataset::canonical_points;
use crate::error::{HarnessError, Result};
use crate::metrics::EvalRow;
use crate::report::{Diagnostics, MetricsReport, ReportKind};
use crate::rng::{stream, Stream};
use crate::train::TauSource;

pub const FIT_LR: f64 = 1e-2;
pub const FIT_ITERS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitInit {
    /// `x₀ = ψ(R₀)` embedded, for a random `R₀`.
    Random,
    /// `x₀ = ψ(R_gt)` embedded.
    AtTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub rep: RepKind,
    pub method: Method,
    pub loss: LossSpec,
    pub tau: TauSpec,
    pub lambda: f64,
    pub seed: u64,
    pub iters: usize,
    pub lr: f64,
    pub init: FitInit,
    /// Point count for the flow and Chamfer losses.
    pub n_points: usize,
}

impl FitConfig {
    pub fn new(rep: RepKind, method: Method) -> Self {
        Self {
            rep,
            method,
            loss: LossSpec::L2,
            tau: TauSpec::Auto,
            lambda: rotgrad_core::rpmg::DEFAULT_LAMBDA,
            seed: 0,
            iters: FIT_ITERS,
            lr: FIT_LR,
            init: FitInit::Random,
            n_points: DEFAULT_POINTS,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HarnessError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if matches!(self.tau, TauSpec::Probe { .. }) {
            return Err(HarnessError::Config("the tau probe needs a network; use a constant or schedule".into()));
        }
        if self.method != Method::Vanilla
            && matches!(self.tau, TauSpec::Auto | TauSpec::GroundTruth)
            && !self.loss.has_analytic_tau()
        {
            return Err(HarnessError::Config(format!("{} loss has no analytic tau", self.loss.name())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Geodesic error before each step and after the last, in radians.
    pub errors_rad: Vec<f64>,
    /// `‖x‖` at the same instants.
    pub norms: Vec<f64>,
    pub target: [[f64; 3]; 3],
    /// Set when the run stopped early.
    pub aborted: Option<String>,
}

impl FitTrace {
    pub fn final_error(&self) -> f64 {
        *self.errors_rad.last().expect("trace holds the initial state")
    }
}

pub fn fit_single_rotation(cfg: &FitConfig) -> Result<FitTrace> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, Stream::Fit);
    let target: Rotation<f64> = sample_uniform_rotation(&mut rng);
    let start = match cfg.init {
        FitInit::Random => sample_uniform_rotation(&mut rng),
        FitInit::AtTarget => target,
    };
    let loss = match cfg.loss {
        LossSpec::L2 => LossKind::l2(target),
        LossSpec::Geodesic => LossKind::geodesic(target),
        LossSpec::Flow => LossKind::flow(target, canonical_points(cfg.n_points, &mut rng)?)?,
        LossSpec::Chamfer => {
            let z = canonical_points(cfg.n_points, &mut rng)?;
            let obs = z.iter().map(|p| target.rotate(p)).collect();
            LossKind::chamfer(z, obs)?
        }
    };
    let tau_source = match cfg.tau {
        _ if cfg.method == Method::Vanilla => TauSource::constant(0.0),
        TauSpec::Auto => TauSource::Schedule(TauSchedule::new(
            AUTO_TAU_INIT,
            tau_converge_for(&loss)?,
            AUTO_TAU_STEPS,
            cfg.iters,
        )?),
        TauSpec::Schedule {
            tau_init,
            tau_converge,
            n_steps,
        } => TauSource::Schedule(TauSchedule::new(tau_init, tau_converge, n_steps, cfg.iters)?),
        TauSpec::Constant { tau } => TauSource::constant(tau),
        TauSpec::GroundTruth => TauSource::GroundTruth,
        TauSpec::Probe { .. } => unreachable!("rejected by validate"),
    };
    let params = match cfg.method {
        Method::Rpmg => RpmgParams::rpmg(cfg.lambda)?,
        m => RpmgParams::method(m),
    };

    let mut x = representation_map(&start, cfg.rep).embed();
    let mut trace = FitTrace {
        errors_rad: Vec::with_capacity(cfg.iters + 1),
        norms: Vec::with_capacity(cfg.iters + 1),
        target: target.matrix().0,
        aborted: None,
    };
    for it in 0..=cfg.iters {
        let raw = match RawOutput::new(cfg.rep, x.clone()) {
            Ok(raw) => raw,
            Err(e) => {
                trace.aborted = Some(format!("iteration {it}: {e}"));
                break;
            }
        };
        let r = match baseline_rotation(&raw) {
            Ok(r) => r,
            Err(e) => {
                trace.aborted = Some(format!("iteration {it}: {e}"));
                break;
            }
        };
        trace.errors_rad.push(geodesic_distance(&r, &target));
        trace.norms.push(raw.norm());
        if it == cfg.iters {
            break;
        }
        let tau = match &tau_source {
            TauSource::Schedule(s) => s.tau_at(it),
            TauSource::GroundTruth => tau_gt(&loss, &r)?,
        };
        let g = match rpmg_gradient(&raw, &r, &loss, tau, &params) {
            Ok(g) => g,
            Err(e) => {
                trace.aborted = Some(format!("iteration {it}: {e}"));
                break;
            }
        };
        for (xi, gi) in x.iter_mut().zip(&g.g) {
            *xi -= cfg.lr * gi;
        }
    }
    if trace.errors_rad.is_empty() {
        return Err(HarnessError::Numeric(trace.aborted.unwrap_or_default()));
    }
    Ok(trace)
}

/// A fit trace as a report: one row per step, a single sample per row.
pub fn fit_report(cfg: &FitConfig, trace: &FitTrace) -> MetricsReport {
    let evals = trace
        .errors_rad
        .iter()
        .zip(&trace.norms)
        .enumerate()
        .map(|(it, (&e, &n))| {
            let deg = e.to_degrees();
            EvalRow {
                iteration: it,
                mean_deg: deg,
                median_deg: deg,
                acc5: f64::from(u8::from(deg < 5.0)),
                acc3: f64::from(u8::from(deg < 3.0)),
                mean_norm: n,
            }
        })
        .collect();
    let diag = Diagnostics {
        aborted: trace.aborted.clone(),
        ..Diagnostics::default()
    };
    let mut report = MetricsReport::new(ReportKind::Fit, serde_json::to_value(cfg).expect("config serializes"), evals, diag);
    report.final_error_rad = Some(trace.final_error());
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_target_gives_zero_trace() {
        for rep in RepKind::MANIFOLD {
            let mut c = FitConfig::new(rep, Method::Rpmg);
            c.init = FitInit::AtTarget;
            c.iters = 50;
            let t = fit_single_rotation(&c).unwrap();
            assert!(t.errors_rad.iter().all(|&e| e < 1e-7), "{rep}");
        }
    }

    #[test]
    fn pmg_shrinks_quaternion_norm() {
        let mut c = FitConfig::new(RepKind::Quat4, Method::Pmg);
        c.iters = 500;
        let t = fit_single_rotation(&c).unwrap();
        assert!(t.norms.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(t.norms.last().unwrap() < &t.norms[0]);
    }

    #[test]
    fn report_rows() {
        let mut c = FitConfig::new(RepKind::SixD, Method::Mg);
        c.iters = 10;
        let t = fit_single_rotation(&c).unwrap();
        let r = fit_report(&c, &t);
        assert_eq!(r.evals.len(), 11);
        assert_eq!(r.final_error_rad, Some(t.final_error()));
    }

    #[test]
    fn zero_iterations() {
        let mut c = FitConfig::new(RepKind::NineD, Method::Rpmg);
        c.iters = 0;
        assert_eq!(fit_single_rotation(&c).unwrap().errors_rad.len(), 1);
    }
}
