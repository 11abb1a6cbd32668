//! Experiment configuration.

use serde::{Deserialize, Serialize};

use rotgrad_core::riemannian::tau_converge_for;
use rotgrad_core::{LossKind, Method, RepKind, Rotation};

use crate::error::{HarnessError, Result};

pub const DEFAULT_ITERS: usize = 5000;
pub const DEFAULT_BATCH: usize = 32;
pub const DEFAULT_POINTS: usize = 16;
pub const DEFAULT_ROTATIONS: usize = 2048;
pub const DEFAULT_LR: f64 = 1e-3;
/// Step decay of the learning rate: multiply by the factor every so many
/// iterations, ten decays over a default run.
pub const DEFAULT_LR_DECAY: f64 = 0.7;
pub const DEFAULT_LR_DECAY_EVERY: usize = 500;
pub const DEFAULT_EVAL_EVERY: usize = 100;
pub const DEFAULT_HIDDEN: [usize; 2] = [128, 128];
pub const TEST_FRACTION: f64 = 0.2;

/// Default ramp start and step count of the automatic τ schedule.
pub const AUTO_TAU_INIT: f64 = 0.05;
pub const AUTO_TAU_STEPS: usize = 10;
/// S² ramps from 0.1 to its analytic limit 0.5.
pub const S2_TAU_INIT: f64 = 0.1;
pub const S2_TAU_CONVERGE: f64 = 0.5;
/// Mean goal distance aimed for by the τ probe, in degrees.
pub const DEFAULT_PROBE_TARGET_DEG: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossSpec {
    L2,
    Geodesic,
    Flow,
    Chamfer,
}

impl LossSpec {
    pub const ALL: [LossSpec; 4] = [LossSpec::L2, LossSpec::Geodesic, LossSpec::Flow, LossSpec::Chamfer];

    pub fn name(self) -> &'static str {
        match self {
            LossSpec::L2 => "l2",
            LossSpec::Geodesic => "geodesic",
            LossSpec::Flow => "flow",
            LossSpec::Chamfer => "chamfer",
        }
    }

    pub fn has_analytic_tau(self) -> bool {
        matches!(self, LossSpec::L2 | LossSpec::Geodesic)
    }

    /// The analytic small-angle τ, for the losses that have one.
    pub fn tau_converge(self) -> Option<f64> {
        let target = Rotation::identity();
        match self {
            LossSpec::L2 => tau_converge_for(&LossKind::l2(target)).ok(),
            LossSpec::Geodesic => tau_converge_for(&LossKind::geodesic(target)).ok(),
            LossSpec::Flow | LossSpec::Chamfer => None,
        }
    }
}

impl std::str::FromStr for LossSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        LossSpec::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::Config(format!("unknown loss {s:?}; expected l2, geodesic, flow, chamfer")))
    }
}

/// Where the Riemannian step size comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TauSpec {
    /// Ramp to the analytic limit of the loss.
    Auto,
    Schedule {
        tau_init: f64,
        tau_converge: f64,
        n_steps: usize,
    },
    Constant {
        tau: f64,
    },
    /// Per-sample τ for which the goal equals the ground truth.
    GroundTruth,
    /// Constant τ chosen at initialization as the largest candidate whose
    /// mean goal distance stays within `target_deg`.
    Probe {
        target_deg: f64,
    },
}

impl TauSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            TauSpec::Auto | TauSpec::GroundTruth => Ok(()),
            TauSpec::Schedule {
                tau_init,
                tau_converge,
                n_steps,
            } => {
                if !(tau_init > 0.0 && tau_init <= tau_converge && tau_converge.is_finite()) || n_steps == 0 {
                    return Err(HarnessError::Config(format!(
                        "tau schedule needs 0 < tau_init <= tau_converge and n_steps >= 1, got {tau_init}, {tau_converge}, {n_steps}"
                    )));
                }
                Ok(())
            }
            TauSpec::Constant { tau } => {
                if !(tau >= 0.0 && tau.is_finite()) {
                    return Err(HarnessError::Config(format!("tau must be finite and >= 0, got {tau}")));
                }
                Ok(())
            }
            TauSpec::Probe { target_deg } => {
                if !(target_deg > 0.0 && target_deg < 180.0) {
                    return Err(HarnessError::Config(format!("probe target must lie in (0, 180), got {target_deg}")));
                }
                Ok(())
            }
        }
    }
}

/// Synthetic data and optimizer settings shared by every training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub iters: usize,
    pub batch: usize,
    pub n_points: usize,
    pub n_rotations: usize,
    pub lr: f64,
    /// Factor applied to the learning rate every `lr_decay_every` steps; 1 disables.
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    pub eval_every: usize,
    pub hidden: Vec<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            iters: DEFAULT_ITERS,
            batch: DEFAULT_BATCH,
            n_points: DEFAULT_POINTS,
            n_rotations: DEFAULT_ROTATIONS,
            lr: DEFAULT_LR,
            lr_decay: DEFAULT_LR_DECAY,
            lr_decay_every: DEFAULT_LR_DECAY_EVERY,
            eval_every: DEFAULT_EVAL_EVERY,
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

impl RunSettings {
    /// Learning rate in effect at iteration `it`.
    pub fn lr_at(&self, it: usize) -> f64 {
        self.lr * self.lr_decay.powi((it / self.lr_decay_every) as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.eval_every == 0 || self.lr_decay_every == 0 {
            return Err(HarnessError::Config("batch, eval and decay intervals must be positive".into()));
        }
        if self.n_points < 4 {
            return Err(HarnessError::Config(format!("need at least 4 points, got {}", self.n_points)));
        }
        let n_test = (self.n_rotations as f64 * TEST_FRACTION).round() as usize;
        if n_test == 0 || n_test >= self.n_rotations {
            return Err(HarnessError::Config(format!(
                "{} rotations leave no train or test split",
                self.n_rotations
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HarnessError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(HarnessError::Config(format!("lr decay must lie in (0, 1], got {}", self.lr_decay)));
        }
        if self.hidden.contains(&0) {
            return Err(HarnessError::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// One SO(3) training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rep: RepKind,
    pub method: Method,
    pub loss: LossSpec,
    pub lambda: f64,
    pub tau: TauSpec,
    #[serde(flatten)]
    pub run: RunSettings,
}

impl ExperimentConfig {
    pub fn new(rep: RepKind, method: Method) -> Self {
        Self {
            rep,
            method,
            loss: LossSpec::L2,
            lambda: rotgrad_core::rpmg::DEFAULT_LAMBDA,
            tau: TauSpec::Auto,
            run: RunSettings::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.run.iters = iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        check_lambda(self.lambda)?;
        self.tau.validate()?;
        if self.method != Method::Vanilla
            && matches!(self.tau, TauSpec::Auto | TauSpec::GroundTruth)
            && !self.loss.has_analytic_tau()
        {
            return Err(HarnessError::Config(format!(
                "{} loss has no analytic tau; use a constant, schedule or probe",
                self.loss.name()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(HarnessError::Config(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

/// Unit-vector regression methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum S2Method {
    /// L2 between the normalized prediction and the target, backpropagated.
    #[serde(rename = "l2-norm")]
    L2WithNorm,
    /// L2 between the raw prediction and the target.
    #[serde(rename = "l2-raw")]
    L2WithoutNorm,
    Mg,
    Pmg,
    Rpmg,
}

impl S2Method {
    pub const ALL: [S2Method; 5] = [
        S2Method::L2WithNorm,
        S2Method::L2WithoutNorm,
        S2Method::Mg,
        S2Method::Pmg,
        S2Method::Rpmg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            S2Method::L2WithNorm => "l2-norm",
            S2Method::L2WithoutNorm => "l2-raw",
            S2Method::Mg => "mg",
            S2Method::Pmg => "pmg",
            S2Method::Rpmg => "rpmg",
        }
    }
}

impl std::str::FromStr for S2Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        S2Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "unknown sphere method {s:?}; expected l2-norm, l2-raw, mg, pmg, rpmg"
                ))
            })
    }
}

/// One S² training run; the target is the rotated z axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S2Config {
    pub method: S2Method,
    pub lambda: f64,
    pub tau: TauSpec,
    #[serde(flatten)]
    pub run: RunSettings,
}

impl S2Config {
    pub fn new(method: S2Method) -> Self {
        Self {
            method,
            lambda: rotgrad_core::rpmg::DEFAULT_LAMBDA,
            tau: TauSpec::Auto,
            run: RunSettings::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        check_lambda(self.lambda)?;
        self.tau.validate()?;
        if matches!(self.tau, TauSpec::GroundTruth | TauSpec::Probe { .. }) {
            return Err(HarnessError::Config("sphere runs take auto, schedule or constant tau".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::new(RepKind::NineD, Method::Rpmg).validate().unwrap();
        S2Config::new(S2Method::Rpmg).validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::new(RepKind::Quat4, Method::Rpmg);
        c.lambda = 2.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(RepKind::Quat4, Method::Rpmg);
        c.loss = LossSpec::Flow;
        assert!(c.validate().is_err());
        c.tau = TauSpec::Constant { tau: 0.05 };
        c.validate().unwrap();
        let mut c = ExperimentConfig::new(RepKind::Quat4, Method::Rpmg);
        c.run.n_points = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let mut c = ExperimentConfig::new(RepKind::TenD, Method::Pmg);
        c.tau = TauSpec::Schedule {
            tau_init: 0.1,
            tau_converge: 0.3,
            n_steps: 4,
        };
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"rep\":\"10d\""));
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn names_parse() {
        for l in LossSpec::ALL {
            assert_eq!(l.name().parse::<LossSpec>().unwrap(), l);
            assert_eq!(l.tau_converge().is_some(), l.has_analytic_tau());
        }
        for m in S2Method::ALL {
            assert_eq!(m.name().parse::<S2Method>().unwrap(), m);
        }
    }
}
