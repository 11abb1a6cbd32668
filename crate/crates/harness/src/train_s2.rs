//! Unit-vector regression: predict the rotated z axis `R·e_z`.

use rand::Rng;

use rotgrad_core::lin::Vec3;
use rotgrad_core::sphere::{s2_map, s2_rpmg_gradient, UnitVector3};
use rotgrad_core::{Real, TauSchedule};

use crate::config::{S2Config, S2Method, TauSpec, AUTO_TAU_STEPS, S2_TAU_CONVERGE, S2_TAU_INIT};
use crate::dataset::SyntheticDataset;
use crate::error::{HarnessError, Result};
use crate::metrics::{summarize_errors, EvalRow};
use crate::nn::{Adam, Mlp};
use crate::report::{Diagnostics, MetricsReport, ReportKind};
use crate::rng::{stream, Stream};
use crate::train::{check_finite, is_eval_iter, layer_sizes};

fn targets<T: Real>(ds: &SyntheticDataset<T>) -> Vec<UnitVector3<T>> {
    ds.rotations
        .iter()
        .map(|r| UnitVector3::from_unit_unchecked(r.matrix().col(2)))
        .collect()
}

fn evaluate<T: Real>(net: &Mlp<T>, ds: &SyntheticDataset<T>, gts: &[UnitVector3<T>], it: usize) -> Result<EvalRow> {
    let idx: Vec<usize> = ds.test_indices().collect();
    let out = net.predict(&ds.gather(&idx), idx.len())?;
    check_finite(&out, it, "network output")?;
    let mut errs = Vec::with_capacity(idx.len());
    let mut norm_sum = 0.0;
    for (s, &i) in idx.iter().enumerate() {
        let x = Vec3::from_fn(|k| out[3 * s + k]);
        norm_sum += x.norm().to_f64_lossy();
        errs.push(match s2_map(&x) {
            Ok(xh) => xh.angle_to(&gts[i]).to_f64_lossy().to_degrees(),
            Err(_) => 180.0,
        });
    }
    Ok(EvalRow::new(it, summarize_errors(&errs)?, norm_sum / idx.len() as f64))
}

/// Ambient gradient of one sample, or `None` for a degenerate output.
fn sample_gradient<T: Real>(
    method: S2Method,
    x: &Vec3<T>,
    gt: &UnitVector3<T>,
    tau: T,
    lambda: T,
    diag: &mut Diagnostics,
) -> Option<Vec3<T>> {
    let two = T::c(2.0);
    match method {
        S2Method::L2WithoutNorm => Some((*x - *gt.vec()) * two),
        S2Method::L2WithNorm => {
            let xh = s2_map(x).ok()?;
            let e = (*xh.vec() - *gt.vec()) * two;
            // d(x/‖x‖) = (I − x̂x̂ᵀ)/‖x‖
            Some((e - *xh.vec() * xh.vec().dot(&e)) / x.norm())
        }
        S2Method::Mg | S2Method::Pmg | S2Method::Rpmg => {
            let l = match method {
                S2Method::Mg => T::one(),
                S2Method::Pmg => T::zero(),
                _ => lambda,
            };
            let r = s2_rpmg_gradient(x, gt, tau, l).ok()?;
            if r.antipodal {
                diag.antipodal_samples += 1;
            }
            Some(r.g)
        }
    }
}

pub fn train_s2(cfg: &S2Config) -> Result<MetricsReport> {
    train_s2_generic::<f64>(cfg)
}

pub fn train_s2_generic<T: Real>(cfg: &S2Config) -> Result<MetricsReport> {
    cfg.validate()?;
    let run = &cfg.run;
    let ds = SyntheticDataset::<T>::generate(run.n_points, run.n_rotations, run.seed)?;
    let gts = targets(&ds);
    let mut net = Mlp::<T>::glorot(&layer_sizes(ds.input_dim(), run, 3), &mut stream(run.seed, Stream::Init))?;
    let mut adam = Adam::new(net.params().len(), T::c(run.lr));
    let mut batches = stream(run.seed, Stream::Batches);
    let schedule = match cfg.tau {
        TauSpec::Auto => TauSchedule::new(T::c(S2_TAU_INIT), T::c(S2_TAU_CONVERGE), AUTO_TAU_STEPS, run.iters)?,
        TauSpec::Schedule {
            tau_init,
            tau_converge,
            n_steps,
        } => TauSchedule::new(T::c(tau_init), T::c(tau_converge), n_steps, run.iters)?,
        TauSpec::Constant { tau } => TauSchedule::constant(T::c(tau)),
        _ => return Err(HarnessError::Config("unsupported tau for sphere runs".into())),
    };
    let lambda = T::c(cfg.lambda);
    let inv_batch = T::one() / T::c(run.batch as f64);
    let mut diag = Diagnostics::default();

    let mut evals = Vec::new();
    for it in 0..run.iters {
        if is_eval_iter(it, run) {
            evals.push(evaluate(&net, &ds, &gts, it)?);
        }
        let idx: Vec<usize> = (0..run.batch).map(|_| batches.random_range(0..ds.n_train())).collect();
        let (out, cache) = net.forward(&ds.gather(&idx), run.batch)?;
        check_finite(&out, it, "network output")?;
        let tau = schedule.tau_at(it);
        let mut out_grad = vec![T::zero(); out.len()];
        for (s, &i) in idx.iter().enumerate() {
            let x = Vec3::from_fn(|k| out[3 * s + k]);
            let Some(g) = sample_gradient(cfg.method, &x, &gts[i], tau, lambda, &mut diag) else {
                diag.degenerate_samples += 1;
                continue;
            };
            for k in 0..3 {
                out_grad[3 * s + k] = g[k] * inv_batch;
            }
        }
        let grads = net.backward(&cache, &out_grad)?;
        check_finite(&grads, it, "parameter gradient")?;
        adam.lr = T::c(run.lr_at(it));
        adam.step(net.params_mut(), &grads)?;
    }
    evals.push(evaluate(&net, &ds, &gts, run.iters)?);
    if run.iters == 0 {
        evals.truncate(1);
    }
    let config = serde_json::to_value(cfg).expect("config serializes");
    Ok(MetricsReport::new(ReportKind::TrainS2, config, evals, diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(method: S2Method) -> S2Config {
        let mut c = S2Config::new(method);
        c.run.iters = 40;
        c.run.n_rotations = 100;
        c.run.hidden = vec![16];
        c.run.eval_every = 20;
        c
    }

    #[test]
    fn deterministic_and_all_methods_run() {
        for m in S2Method::ALL {
            let c = small(m);
            let a = train_s2(&c).unwrap();
            assert_eq!(a, train_s2(&c).unwrap(), "{m:?}");
            assert_eq!(a.evals.len(), 3);
        }
    }

    #[test]
    fn l2_with_norm_gradient_matches_finite_differences() {
        let x = Vec3::new(0.3f64, -1.2, 0.7);
        let gt = s2_map(&Vec3::new(1.0, 0.5, -0.2)).unwrap();
        let mut d = Diagnostics::default();
        let g = sample_gradient(S2Method::L2WithNorm, &x, &gt, 0.0, 0.0, &mut d).unwrap();
        let f = |v: Vec3<f64>| (*s2_map(&v).unwrap().vec() - *gt.vec()).norm_squared();
        for k in 0..3 {
            let e = Vec3::<f64>::axis(k) * 1e-6;
            let fd = (f(x + e) - f(x - e)) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
