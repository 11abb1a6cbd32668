//! Network training on the synthetic pose task.

use rand::Rng;

use rotgrad_core::riemannian::{tau_converge_for, tau_gt};
use rotgrad_core::{baseline_rotation, rpmg_gradient, LossKind, Method, RawOutput, Real, RpmgParams, TauSchedule};

use crate::config::{ExperimentConfig, LossSpec, RunSettings, TauSpec, AUTO_TAU_INIT, AUTO_TAU_STEPS};
use crate::dataset::SyntheticDataset;
use crate::error::{HarnessError, Result};
use crate::metrics::{summarize_errors, EvalRow};
use crate::nn::{Adam, Mlp};
use crate::probe::{default_candidates, select_tau, tau_probe};
use crate::report::{Diagnostics, MetricsReport, ReportKind};
use crate::rng::{stream, Stream};

/// Samples used by the τ probe.
const PROBE_SAMPLES: usize = 256;
/// Rows per forward pass during evaluation.
const EVAL_CHUNK: usize = 512;

pub(crate) enum TauSource<T> {
    Schedule(TauSchedule<T>),
    GroundTruth,
}

impl<T: Real> TauSource<T> {
    pub(crate) fn constant(tau: f64) -> Self {
        TauSource::Schedule(TauSchedule::constant(T::c(tau)))
    }
}

/// Loss of sample `i` of the dataset.
pub fn loss_for<T: Real>(spec: LossSpec, ds: &SyntheticDataset<T>, i: usize) -> LossKind<T> {
    let target = ds.rotations[i];
    match spec {
        LossSpec::L2 => LossKind::l2(target),
        LossSpec::Geodesic => LossKind::geodesic(target),
        LossSpec::Flow => LossKind::Flow {
            target,
            points: ds.points.clone(),
        },
        LossSpec::Chamfer => LossKind::Chamfer {
            model: ds.points.clone(),
            observed: ds.points.iter().map(|p| target.rotate(p)).collect(),
        },
    }
}

/// Layer sizes for an input dimension, the configured hidden widths and an output.
pub(crate) fn layer_sizes(input: usize, run: &RunSettings, output: usize) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend(&run.hidden);
    sizes.push(output);
    sizes
}

pub(crate) fn check_finite<T: Real>(values: &[T], iteration: usize, what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::NumericAt {
            iteration,
            detail: format!("non-finite {what}"),
        });
    }
    Ok(())
}

/// Evaluation iterations: every `eval_every` steps plus the final one.
pub(crate) fn is_eval_iter(it: usize, run: &RunSettings) -> bool {
    it.is_multiple_of(run.eval_every)
}

fn evaluate<T: Real>(net: &Mlp<T>, ds: &SyntheticDataset<T>, cfg: &ExperimentConfig, it: usize) -> Result<EvalRow> {
    let idx: Vec<usize> = ds.test_indices().collect();
    let d = cfg.rep.ambient_dim();
    let mut errs = Vec::with_capacity(idx.len());
    let mut norm_sum = 0.0;
    for chunk in idx.chunks(EVAL_CHUNK) {
        let out = net.predict(&ds.gather(chunk), chunk.len())?;
        check_finite(&out, it, "network output")?;
        for (s, &i) in chunk.iter().enumerate() {
            let raw = RawOutput::from_slice(cfg.rep, &out[s * d..(s + 1) * d])?;
            norm_sum += raw.norm().to_f64_lossy();
            // A prediction without a rotation counts as maximally wrong.
            let err = match baseline_rotation(&raw) {
                Ok(r) => rotgrad_core::so3::geodesic_distance(&r, &ds.rotations[i]).to_f64_lossy().to_degrees(),
                Err(_) => 180.0,
            };
            errs.push(err);
        }
    }
    Ok(EvalRow::new(it, summarize_errors(&errs)?, norm_sum / idx.len() as f64))
}

fn resolve_tau<T: Real>(
    cfg: &ExperimentConfig,
    net: &Mlp<T>,
    ds: &SyntheticDataset<T>,
    diag: &mut Diagnostics,
) -> Result<TauSource<T>> {
    Ok(match cfg.tau {
        _ if cfg.method == Method::Vanilla => TauSource::constant(0.0),
        TauSpec::Auto => {
            let conv = tau_converge_for(&loss_for(cfg.loss, ds, 0))?;
            TauSource::Schedule(TauSchedule::new(T::c(AUTO_TAU_INIT), conv, AUTO_TAU_STEPS, cfg.run.iters)?)
        }
        TauSpec::Schedule {
            tau_init,
            tau_converge,
            n_steps,
        } => TauSource::Schedule(TauSchedule::new(T::c(tau_init), T::c(tau_converge), n_steps, cfg.run.iters)?),
        TauSpec::Constant { tau } => TauSource::constant(tau),
        TauSpec::GroundTruth => TauSource::GroundTruth,
        TauSpec::Probe { target_deg } => {
            let idx: Vec<usize> = (0..ds.n_train().min(PROBE_SAMPLES)).collect();
            let out = net.predict(&ds.gather(&idx), idx.len())?;
            let d = cfg.rep.ambient_dim();
            let mut preds = Vec::new();
            let mut losses = Vec::new();
            for (s, &i) in idx.iter().enumerate() {
                if let Ok(r) = baseline_rotation(&RawOutput::from_slice(cfg.rep, &out[s * d..(s + 1) * d])?) {
                    preds.push(r);
                    losses.push(loss_for(cfg.loss, ds, i));
                }
            }
            let rows = tau_probe(&preds, &losses, &default_candidates());
            let tau = select_tau(&rows, target_deg).ok_or_else(|| {
                HarnessError::Config(format!("no probed tau keeps the goal within {target_deg} degrees"))
            })?;
            diag.tau_selected = Some(tau);
            diag.probe = rows;
            TauSource::constant(tau)
        }
    })
}

/// Trains in double precision.
pub fn train(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    train_generic::<f64>(cfg)
}

pub fn train_generic<T: Real>(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let run = &cfg.run;
    let ds = SyntheticDataset::<T>::generate(run.n_points, run.n_rotations, run.seed)?;
    let d = cfg.rep.ambient_dim();
    let mut net = Mlp::<T>::glorot(&layer_sizes(ds.input_dim(), run, d), &mut stream(run.seed, Stream::Init))?;
    let mut adam = Adam::new(net.params().len(), T::c(run.lr));
    let mut batches = stream(run.seed, Stream::Batches);
    let params = match cfg.method {
        Method::Rpmg => RpmgParams::rpmg(T::c(cfg.lambda))?,
        m => RpmgParams::method(m),
    };
    let mut diag = Diagnostics::default();
    let tau_source = resolve_tau(cfg, &net, &ds, &mut diag)?;
    let inv_batch = T::one() / T::c(run.batch as f64);

    let mut evals = Vec::new();
    for it in 0..run.iters {
        if is_eval_iter(it, run) {
            evals.push(evaluate(&net, &ds, cfg, it)?);
        }
        let idx: Vec<usize> = (0..run.batch).map(|_| batches.random_range(0..ds.n_train())).collect();
        let (out, cache) = net.forward(&ds.gather(&idx), run.batch)?;
        check_finite(&out, it, "network output")?;
        let mut out_grad = vec![T::zero(); out.len()];
        for (s, &i) in idx.iter().enumerate() {
            let raw = RawOutput::from_slice(cfg.rep, &out[s * d..(s + 1) * d])?;
            let Ok(r) = baseline_rotation(&raw) else {
                diag.degenerate_samples += 1;
                continue;
            };
            let loss = loss_for(cfg.loss, &ds, i);
            let tau = match &tau_source {
                TauSource::Schedule(s) => s.tau_at(it),
                TauSource::GroundTruth => tau_gt(&loss, &r)?,
            };
            let g = match rpmg_gradient(&raw, &r, &loss, tau, &params) {
                Ok(g) => g,
                Err(rotgrad_core::Error::Degenerate { .. } | rotgrad_core::Error::DegenerateProjection(_)) => {
                    diag.degenerate_samples += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            for (o, &v) in out_grad[s * d..(s + 1) * d].iter_mut().zip(&g.g) {
                *o = v * inv_batch;
            }
        }
        let grads = net.backward(&cache, &out_grad)?;
        check_finite(&grads, it, "parameter gradient")?;
        adam.lr = T::c(run.lr_at(it));
        adam.step(net.params_mut(), &grads)?;
    }
    evals.push(evaluate(&net, &ds, cfg, run.iters)?);
    if run.iters == 0 {
        evals.truncate(1);
    }
    let config = serde_json::to_value(cfg).expect("config serializes");
    Ok(MetricsReport::new(ReportKind::Train, config, evals, diag))
}
