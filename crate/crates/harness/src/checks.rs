//! The verification suite behind `rotgrad check`.
//!
//! Each check measures one residual over seeded random cases and compares it
//! to a fixed threshold. Checks draw from their own random substreams, so the
//! filter never changes what a check sees.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use rotgrad_core::lin::{eig_sym4, solve_dense, svd3, Mat3, Mat4, SmallMatrix, Vec3};
use rotgrad_core::repr::params_to_sym4;
use rotgrad_core::riemannian::goal_for_loss;
use rotgrad_core::rpmg::goal_embedding;
use rotgrad_core::so3::{exp_so3, geodesic_distance, log_so3, quat_to_rot, rot_to_quat, sample_uniform_rotation};
use rotgrad_core::sphere::{s2_exp, s2_riemannian_grad, UnitVector3};
use rotgrad_core::{
    baseline_backward, baseline_rotation, euclid_grad, representation_map, riemannian_grad, rpmg_gradient, tau_gt,
    LossKind, Method, Projection, RawOutput, RepKind, Rotation, RpmgParams,
};

use crate::oracle::{projection_oracle, sample_case, satisfies_constraints};
use crate::rng::{substream, Rng as StreamRng, Stream};

pub const DEFAULT_SAMPLES: usize = 1000;
/// Cases for the per-loss finite-difference checks.
pub const FD_CASES: usize = 100;
pub const TAU_LEMMA_ANGLES: [f64; 3] = [1e-2, 1e-3, 1e-4];

pub type ProjectFn = fn(&RawOutput<f64>, &Rotation<f64>) -> rotgrad_core::Result<Projection<f64>>;

/// Replaceable pieces of the library, for fault injection.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub inverse_project: ProjectFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            inverse_project: rotgrad_core::inverse_project,
        }
    }
}

#[derive(Clone, Copy)]
pub struct CheckOptions {
    pub seed: u64,
    pub samples: usize,
    pub hooks: Hooks,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: DEFAULT_SAMPLES,
            hooks: Hooks::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `measured <= threshold`; NaN fails.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            threshold: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: measured {:.3e} (threshold {:.3e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

pub struct CheckDef {
    pub name: String,
    run: Box<dyn Fn(&CheckOptions) -> CheckResult + Send + Sync>,
}

impl CheckDef {
    fn new(name: impl Into<String>, run: impl Fn(&CheckOptions) -> CheckResult + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            run: Box::new(run),
        }
    }

    pub fn run(&self, opts: &CheckOptions) -> CheckResult {
        (self.run)(opts)
    }
}

/// Every check, in reporting order.
pub fn all_checks() -> Vec<CheckDef> {
    let mut v = Vec::new();
    for rep in RepKind::MANIFOLD {
        v.push(CheckDef::new(format!("projection-optimality-{rep}"), move |o| projection_optimality(rep, o)));
        v.push(CheckDef::new(format!("projection-membership-{rep}"), move |o| projection_membership(rep, o)));
    }
    v.push(CheckDef::new("projection-kkt-residual", kkt_residual));
    for loss in FdLoss::ALL {
        v.push(CheckDef::new(format!("riemannian-grad-fd-{}", loss.name()), move |o| riemannian_grad_fd(loss, o)));
    }
    v.push(CheckDef::new("riemannian-grad-hand-case", |_| riemannian_hand_case()));
    v.push(CheckDef::new("tau-converge-l2", |o| tau_lemma_so3(false, o)));
    v.push(CheckDef::new("tau-converge-geodesic", |o| tau_lemma_so3(true, o)));
    v.push(CheckDef::new("tau-converge-s2", tau_lemma_s2));
    v.push(CheckDef::new("geodesic-path", geodesic_path));
    v.push(CheckDef::new("mg-lambda-one", mg_lambda_one));
    v.push(CheckDef::new("mg-tau-gt", mg_tau_gt));
    v.push(CheckDef::new("baseline-backward-fd", baseline_backward_fd));
    v.push(CheckDef::new("round-trip-representations", representation_round_trip));
    v.push(CheckDef::new("round-trip-exp-log", exp_log_round_trip));
    v.push(CheckDef::new("numerics-svd3", svd_residual));
    v.push(CheckDef::new("numerics-eig-sym4", eig_residual));
    v.push(CheckDef::new("numerics-solve-dense", solve_residual));
    v
}

/// Runs the checks whose name contains `filter`, or all of them.
pub fn run_checks(opts: &CheckOptions, filter: Option<&str>) -> Vec<CheckResult> {
    all_checks()
        .iter()
        .filter(|c| filter.is_none_or(|f| c.name.contains(f)))
        .map(|c| c.run(opts))
        .collect()
}

fn rng_for(opts: &CheckOptions, name: &str) -> StreamRng {
    // FNV-1a keeps the stream tied to the check name rather than its position.
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    substream(opts.seed, Stream::Checks, h)
}

fn normal<R: Rng + ?Sized>(g: &mut R) -> f64 {
    StandardNormal.sample(g)
}

fn unit3<R: Rng + ?Sized>(g: &mut R) -> Vec3<f64> {
    loop {
        let v = Vec3::from_fn(|_| normal(g));
        if let Some(u) = v.try_normalize(1e-3) {
            return u;
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Angle bound on sampled projection cases.
pub const PROJECTION_MAX_ANGLE: f64 = PI / 3.0;

pub fn projection_optimality(rep: RepKind, opts: &CheckOptions) -> CheckResult {
    let name = format!("projection-optimality-{rep}");
    let mut g = rng_for(opts, &name);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..opts.samples {
        let (x, rg) = sample_case(rep, PROJECTION_MAX_ANGLE, &mut g);
        let p = match (opts.hooks.inverse_project)(&x, &rg) {
            Ok(p) => p,
            Err(e) => return CheckResult::failed(name, format!("projection failed: {e}")),
        };
        let oracle = projection_oracle(&x, &rg);
        worst = worst.max(dist(x.values(), &p.x_gp) - dist(x.values(), &oracle));
    }
    CheckResult::at_most(name, worst, 1e-4, format!("max excess distance over {} cases", opts.samples))
}

pub fn projection_membership(rep: RepKind, opts: &CheckOptions) -> CheckResult {
    let name = format!("projection-membership-{rep}");
    let mut g = rng_for(opts, &name);
    let mut worst: f64 = 0.0;
    let mut n_in = 0;
    for _ in 0..opts.samples {
        let (x, rg) = sample_case(rep, PROJECTION_MAX_ANGLE, &mut g);
        let p = match (opts.hooks.inverse_project)(&x, &rg) {
            Ok(p) => p,
            Err(e) => return CheckResult::failed(name, format!("projection failed: {e}")),
        };
        if !satisfies_constraints(&x, &rg, &p) {
            continue;
        }
        n_in += 1;
        let r = RawOutput::new(rep, p.x_gp.clone()).and_then(|y| baseline_rotation(&y));
        worst = worst.max(r.map(|r| geodesic_distance(&r, &rg)).unwrap_or(f64::INFINITY));
    }
    if n_in == 0 {
        return CheckResult::failed(name, "no case satisfied the constraints");
    }
    CheckResult::at_most(name, worst, 1e-6, format!("max geodesic residual on {n_in}/{} cases", opts.samples))
}

pub fn kkt_residual(opts: &CheckOptions) -> CheckResult {
    let name = "projection-kkt-residual";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let (x, rg) = sample_case(RepKind::TenD, PROJECTION_MAX_ANGLE, &mut g);
        let p = match (opts.hooks.inverse_project)(&x, &rg) {
            Ok(p) => p,
            Err(e) => return CheckResult::failed(name, format!("projection failed: {e}")),
        };
        let Some(mu) = p.lambda_eig else {
            return CheckResult::failed(name, "no eigenvalue multiplier returned");
        };
        let q = *rot_to_quat(&rg).coords();
        let r = params_to_sym4(&p.x_gp).mul_vec(&q) - q * mu;
        worst = worst.max(r.norm());
    }
    CheckResult::at_most(name, worst, 1e-8, format!("max ‖A(x_gp)q − λq‖ over {} cases", opts.samples))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdLoss {
    L2,
    Geodesic,
    Flow,
    Chamfer,
}

impl FdLoss {
    pub const ALL: [FdLoss; 4] = [FdLoss::L2, FdLoss::Geodesic, FdLoss::Flow, FdLoss::Chamfer];

    pub fn name(self) -> &'static str {
        match self {
            FdLoss::L2 => "l2",
            FdLoss::Geodesic => "geodesic",
            FdLoss::Flow => "flow",
            FdLoss::Chamfer => "chamfer",
        }
    }

    fn tolerance(self) -> f64 {
        match self {
            FdLoss::Chamfer => 1e-3,
            _ => 1e-6,
        }
    }
}

fn cloud<R: Rng + ?Sized>(g: &mut R, n: usize) -> Vec<Vec3<f64>> {
    (0..n).map(|_| Vec3::from_fn(|_| g.random_range(-1.0..1.0))).collect()
}

fn nearest_assignment(r: &Rotation<f64>, model: &[Vec3<f64>], observed: &[Vec3<f64>]) -> Vec<usize> {
    let back: Vec<Vec3<f64>> = observed.iter().map(|x| r.matrix().transpose().mul_vec(x)).collect();
    let near = |p: &Vec3<f64>, set: &[Vec3<f64>]| {
        (0..set.len())
            .min_by(|&a, &b| (*p - set[a]).norm().total_cmp(&(*p - set[b]).norm()))
            .unwrap_or(0)
    };
    back.iter()
        .map(|p| near(p, model))
        .chain(model.iter().map(|z| near(z, &back)))
        .collect()
}

/// Central differences of `L(R·Exp(φ))` at `φ = 0` against the analytic
/// Riemannian gradient.
pub fn riemannian_grad_fd(loss: FdLoss, opts: &CheckOptions) -> CheckResult {
    let name = format!("riemannian-grad-fd-{}", loss.name());
    let mut g = rng_for(opts, &name);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < FD_CASES {
        let r: Rotation<f64> = sample_uniform_rotation(&mut g);
        let gt: Rotation<f64> = sample_uniform_rotation(&mut g);
        if geodesic_distance(&r, &gt) > PI - 0.05 {
            continue;
        }
        let l = match loss {
            FdLoss::L2 => LossKind::l2(gt),
            FdLoss::Geodesic => LossKind::geodesic(gt),
            FdLoss::Flow => LossKind::Flow {
                target: gt,
                points: cloud(&mut g, 16),
            },
            FdLoss::Chamfer => {
                let model = cloud(&mut g, 16);
                let observed = model.iter().map(|p| gt.rotate(p)).collect();
                LossKind::Chamfer { model, observed }
            }
        };
        let analytic = riemannian_grad(&r, &euclid_grad(&l, &r));
        let mut fd = Vec3::zeros();
        let mut switched = false;
        for k in 0..3 {
            let rp = exp_so3(&r, &(Vec3::axis(k) * h));
            let rm = exp_so3(&r, &(Vec3::axis(k) * -h));
            if let LossKind::Chamfer { model, observed } = &l {
                let base = nearest_assignment(&r, model, observed);
                switched |= nearest_assignment(&rp, model, observed) != base
                    || nearest_assignment(&rm, model, observed) != base;
            }
            fd[k] = (l.value(&rp) - l.value(&rm)) / (2.0 * h);
        }
        if switched {
            continue;
        }
        used += 1;
        worst = worst.max((fd - analytic).norm() / analytic.norm().max(1e-12));
    }
    CheckResult::at_most(name, worst, loss.tolerance(), format!("max relative error over {FD_CASES} cases"))
}

/// `R = I`, `R_gt = rot_z(θ)` under L2 gives `φ = (0, 0, −4 sin θ)`.
pub fn riemannian_hand_case() -> CheckResult {
    let mut worst: f64 = 0.0;
    for theta in [0.1, 0.7, 1.5, 2.5] {
        let l = LossKind::l2(Rotation::about_z(theta));
        let r = Rotation::identity();
        let phi = riemannian_grad(&r, &euclid_grad(&l, &r));
        worst = worst.max((phi - Vec3::new(0.0, 0.0, -4.0 * f64::sin(theta))).max_abs());
    }
    CheckResult::at_most("riemannian-grad-hand-case", worst, 1e-9, "max deviation over four angles")
}

/// One step with the analytic τ from distance θ leaves at most θ³.
pub fn tau_lemma_so3(geodesic: bool, opts: &CheckOptions) -> CheckResult {
    let name = if geodesic { "tau-converge-geodesic" } else { "tau-converge-l2" };
    let tau = if geodesic { 0.5 } else { 0.25 };
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    for theta in TAU_LEMMA_ANGLES {
        for _ in 0..50 {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            let gt = exp_so3(&r, &(unit3(&mut g) * theta));
            let l = if geodesic { LossKind::geodesic(gt) } else { LossKind::l2(gt) };
            let rg = goal_for_loss(&l, &r, tau);
            worst = worst.max(geodesic_distance(&rg, &gt) / theta.powi(3));
        }
    }
    CheckResult::at_most(name, worst, 1.0, format!("max residual/θ³, τ = {tau}"))
}

pub fn tau_lemma_s2(opts: &CheckOptions) -> CheckResult {
    let name = "tau-converge-s2";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    for theta in TAU_LEMMA_ANGLES {
        for _ in 0..50 {
            let x = UnitVector3::from_unit_unchecked(unit3(&mut g));
            let d = unit3(&mut g);
            let t = (d - *x.vec() * d.dot(x.vec())).try_normalize(1e-6).unwrap_or(Vec3::axis(0));
            let gt = s2_exp(&x, &(t * theta));
            let goal = s2_exp(&x, &(s2_riemannian_grad(&x, &gt) * -0.5));
            worst = worst.max(goal.angle_to(&gt) / theta.powi(3));
        }
    }
    CheckResult::at_most(name, worst, 1.0, "max residual/θ³, τ = 0.5")
}

/// The L2 goal lies on the geodesic from `R` towards `R_gt`.
pub fn geodesic_path(opts: &CheckOptions) -> CheckResult {
    let name = "geodesic-path";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 1.0;
    let mut done = 0;
    while done < opts.samples {
        let r: Rotation<f64> = sample_uniform_rotation(&mut g);
        let gt: Rotation<f64> = sample_uniform_rotation(&mut g);
        if !(1e-3..PI - 0.05).contains(&geodesic_distance(&r, &gt)) {
            continue;
        }
        done += 1;
        let tau = g.random_range(0.01..0.25);
        let rg = goal_for_loss(&LossKind::l2(gt), &r, tau);
        let (a, b) = (log_so3(&r, &rg), log_so3(&r, &gt));
        worst = worst.min(a.dot(&b) / (a.norm() * b.norm()));
    }
    CheckResult::at_most(name, 1.0 - worst, 1e-8, format!("1 − min cosine over {} cases", opts.samples))
}

fn random_raw<R: Rng + ?Sized>(rep: RepKind, g: &mut R) -> (RawOutput<f64>, Rotation<f64>) {
    loop {
        let x = RawOutput::new(rep, (0..rep.ambient_dim()).map(|_| normal(g)).collect()).expect("finite");
        if let Ok(r) = baseline_rotation(&x) {
            return (x, r);
        }
    }
}

/// `λ = 1` reproduces MG bit for bit.
pub fn mg_lambda_one(opts: &CheckOptions) -> CheckResult {
    let name = "mg-lambda-one";
    let mut g = rng_for(opts, name);
    let mut mismatches = 0;
    let n = opts.samples.min(200);
    for rep in RepKind::ALL {
        for _ in 0..n {
            let (x, r) = random_raw(rep, &mut g);
            let l = LossKind::l2(sample_uniform_rotation(&mut g));
            let tau = g.random_range(0.01..0.5);
            let a = rpmg_gradient(&x, &r, &l, tau, &RpmgParams::rpmg(1.0).expect("valid lambda"));
            let b = rpmg_gradient(&x, &r, &l, tau, &RpmgParams::method(Method::Mg));
            match (a, b) {
                (Ok(a), Ok(b)) if a.g.iter().zip(&b.g).all(|(p, q)| p.to_bits() == q.to_bits()) => {}
                _ => mismatches += 1,
            }
        }
    }
    CheckResult::at_most(name, mismatches as f64, 0.0, "cases differing in any bit")
}

/// MG with the per-sample ground-truth τ pulls straight towards `ψ(R_gt)`.
pub fn mg_tau_gt(opts: &CheckOptions) -> CheckResult {
    let name = "mg-tau-gt";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    let n = opts.samples.min(250);
    for rep in RepKind::MANIFOLD {
        for _ in 0..n {
            let (x, r) = random_raw(rep, &mut g);
            let gt = exp_so3(&r, &(unit3(&mut g) * g.random_range(0.05..3.0)));
            let l = LossKind::l2(gt);
            let res = tau_gt(&l, &r)
                .and_then(|tau| rpmg_gradient(&x, &r, &l, tau, &RpmgParams::method(Method::Mg)));
            let Ok(grad) = res else {
                return CheckResult::failed(name, format!("{rep}: gradient failed"));
            };
            let expect: Vec<f64> = x.values().iter().zip(goal_embedding(&x, &gt)).map(|(a, b)| a - b).collect();
            worst = worst.max(grad.g.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    CheckResult::at_most(name, worst, 1e-9, "max |g − (x − ψ(R_gt))|")
}

/// Vanilla backward against central differences of `⟨G, φ(π(x))⟩`.
pub fn baseline_backward_fd(opts: &CheckOptions) -> CheckResult {
    let name = "baseline-backward-fd";
    let mut g = rng_for(opts, name);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for rep in RepKind::ALL {
        for _ in 0..20 {
            let (x, _) = random_raw(rep, &mut g);
            let gm = Mat3::from_fn(|_, _| normal(&mut g));
            let Ok(analytic) = baseline_backward(&x, &gm) else {
                return CheckResult::failed(name, format!("{rep}: backward failed"));
            };
            let f = |v: &[f64]| {
                let r = baseline_rotation(&RawOutput::from_slice(rep, v).expect("finite")).expect("nondegenerate");
                r.matrix().frobenius_dot(&gm)
            };
            let mut fd = vec![0.0; x.values().len()];
            for (i, d) in fd.iter_mut().enumerate() {
                let mut p = x.values().to_vec();
                let mut m = x.values().to_vec();
                p[i] += h;
                m[i] -= h;
                *d = (f(&p) - f(&m)) / (2.0 * h);
            }
            worst = worst.max(dist(&fd, &analytic) / norm(&analytic).max(1e-3));
        }
    }
    CheckResult::at_most(name, worst, 1e-4, "max relative error, all representations")
}

pub fn representation_round_trip(opts: &CheckOptions) -> CheckResult {
    let name = "round-trip-representations";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    for rep in RepKind::ALL {
        for _ in 0..opts.samples.min(250) {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            let back = baseline_rotation(&representation_map(&r, rep).embed_raw());
            worst = worst.max(back.map(|b| geodesic_distance(&b, &r)).unwrap_or(f64::INFINITY));
        }
    }
    let mut q_worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let r: Rotation<f64> = sample_uniform_rotation(&mut g);
        q_worst = q_worst.max((*quat_to_rot(&rot_to_quat(&r)).matrix() - *r.matrix()).max_abs());
    }
    CheckResult::at_most(name, worst.max(q_worst), 1e-8, "max φ(π(ψ(R))) and quaternion round-trip error")
}

pub fn exp_log_round_trip(opts: &CheckOptions) -> CheckResult {
    let name = "round-trip-exp-log";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let r: Rotation<f64> = sample_uniform_rotation(&mut g);
        let phi = unit3(&mut g) * g.random_range(0.0..PI - 1e-3);
        worst = worst.max((log_so3(&r, &exp_so3(&r, &phi)) - phi).norm());
    }
    CheckResult::at_most(name, worst, 1e-7, "max ‖log(R, exp(R, φ)) − φ‖")
}

pub fn svd_residual(opts: &CheckOptions) -> CheckResult {
    let name = "numerics-svd3";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let m = Mat3::from_fn(|_, _| normal(&mut g));
        let Ok(s) = svd3(&m) else {
            return CheckResult::failed(name, "svd3 did not converge");
        };
        let orth = (s.u * s.u.transpose() - Mat3::identity())
            .norm()
            .max((s.v * s.v.transpose() - Mat3::identity()).norm());
        let order = s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2] && s.sigma[2] >= 0.0;
        if !order || orth > 1e-9 {
            return CheckResult::failed(name, "singular values unordered or factors not orthogonal");
        }
        worst = worst.max((m - s.reconstruct()).norm() / m.norm().max(1.0));
    }
    CheckResult::at_most(name, worst, 1e-8, "max ‖M − UΣVᵀ‖ / max(1, ‖M‖)")
}

pub fn eig_residual(opts: &CheckOptions) -> CheckResult {
    let name = "numerics-eig-sym4";
    let mut g = rng_for(opts, name);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let b: Mat4<f64> = Mat4::from_fn(|_, _| normal(&mut g));
        let a = (b + b.transpose()) * 0.5;
        let Ok(e) = eig_sym4(&a) else {
            return CheckResult::failed(name, "eig_sym4 did not converge");
        };
        let orth = (e.vectors.transpose() * e.vectors - Mat4::identity()).norm();
        let char_poly = (0..4)
            .map(|k| det4(&(a - Mat4::identity() * e.values[k])).abs())
            .fold(0.0, f64::max);
        if orth > 1e-9 || char_poly > 1e-6 * a.norm().powi(4) {
            return CheckResult::failed(name, "eigenvectors not orthonormal or |det(A − λI)| too large");
        }
        let r = a * e.vectors - e.vectors * Mat4::from_diagonal(&e.values);
        worst = worst.max(r.norm() / a.norm().max(1.0));
    }
    CheckResult::at_most(name, worst, 1e-9, "max ‖AV − VΛ‖ / max(1, ‖A‖)")
}

fn det4(m: &Mat4<f64>) -> f64 {
    let minor = |c: usize| {
        let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
        Mat3::from_fn(|i, j| m[(i + 1, cols[j])]).determinant()
    };
    (0..4).map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[(0, c)] * minor(c)).sum()
}

pub fn solve_residual(opts: &CheckOptions) -> CheckResult {
    let name = "numerics-solve-dense";
    let mut g = rng_for(opts, name);
    let n = 14;
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let diag = n as f64;
        let a = SmallMatrix::from_fn(n, n, |i, j| normal(&mut g) + if i == j { diag } else { 0.0 }).expect("14×14");
        let b: Vec<f64> = (0..n).map(|_| normal(&mut g)).collect();
        let Ok(x) = solve_dense(&a, &b) else {
            return CheckResult::failed(name, "solve_dense reported a singular system");
        };
        let ax = a.mul_vec(&x).expect("dimensions match");
        worst = worst.max(dist(&ax, &b) / norm(&b).max(1.0));
    }
    CheckResult::at_most(name, worst, 1e-9, "max ‖Ax − b‖ / max(1, ‖b‖)")
}
