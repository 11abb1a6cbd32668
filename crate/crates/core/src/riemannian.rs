//! Losses on SO(3), their Euclidean and Riemannian gradients, the goal
//! rotation produced by one Riemannian gradient step, and the τ schedule.

use crate::error::{Error, Result};
use crate::lin::{Mat3, Vec3};
use crate::scalar::Real;
use crate::so3::{exp_so3, geodesic_distance, hat, Rotation, TangentSO3};

/// Upper bound on point-set sizes accepted by the point-based losses.
pub const MAX_POINTS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum LossKind<T> {
    /// `‖R − R_gt‖²_F`
    L2Frobenius { target: Rotation<T> },
    /// `θ²` with `θ` the geodesic distance to the target.
    Geodesic { target: Rotation<T> },
    /// `‖R·X − R_gt·X‖²_F` over the points `X`.
    Flow {
        target: Rotation<T>,
        points: Vec<Vec3<T>>,
    },
    /// Symmetric Chamfer distance between the model points `Z` and the
    /// back-rotated observations `Rᵀ·x`, each direction averaged.
    Chamfer {
        model: Vec<Vec3<T>>,
        observed: Vec<Vec3<T>>,
    },
}

impl<T: Real> LossKind<T> {
    pub fn l2(target: Rotation<T>) -> Self {
        LossKind::L2Frobenius { target }
    }

    pub fn geodesic(target: Rotation<T>) -> Self {
        LossKind::Geodesic { target }
    }

    pub fn flow(target: Rotation<T>, points: Vec<Vec3<T>>) -> Result<Self> {
        check_points("flow points", &points)?;
        Ok(LossKind::Flow { target, points })
    }

    pub fn chamfer(model: Vec<Vec3<T>>, observed: Vec<Vec3<T>>) -> Result<Self> {
        check_points("chamfer model", &model)?;
        check_points("chamfer observation", &observed)?;
        Ok(LossKind::Chamfer { model, observed })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::L2Frobenius { .. } => "l2",
            LossKind::Geodesic { .. } => "geodesic",
            LossKind::Flow { .. } => "flow",
            LossKind::Chamfer { .. } => "chamfer",
        }
    }

    /// The supervising rotation, when the loss has one.
    pub fn target(&self) -> Option<&Rotation<T>> {
        match self {
            LossKind::L2Frobenius { target }
            | LossKind::Geodesic { target }
            | LossKind::Flow { target, .. } => Some(target),
            LossKind::Chamfer { .. } => None,
        }
    }

    pub fn value(&self, r: &Rotation<T>) -> T {
        match self {
            LossKind::L2Frobenius { target } => (*r.matrix() - *target.matrix()).norm().powi(2),
            LossKind::Geodesic { target } => geodesic_distance(r, target).powi(2),
            LossKind::Flow { target, points } => {
                let d = *r.matrix() - *target.matrix();
                points.iter().map(|p| d.mul_vec(p).norm_squared()).sum()
            }
            LossKind::Chamfer { model, observed } => {
                let back: Vec<_> = observed.iter().map(|x| r.matrix().transpose().mul_vec(x)).collect();
                let m = matches(&back, model);
                let n_obs = T::c(back.len() as f64);
                let n_model = T::c(model.len() as f64);
                let fwd: T = m.forward.iter().map(|&(i, j)| (back[i] - model[j]).norm_squared()).sum();
                let bwd: T = m.backward.iter().map(|&(i, j)| (back[i] - model[j]).norm_squared()).sum();
                fwd / n_obs + bwd / n_model
            }
        }
    }
}

fn check_points<T: Real>(what: &'static str, pts: &[Vec3<T>]) -> Result<()> {
    if pts.is_empty() || pts.len() > MAX_POINTS {
        return Err(Error::InvalidParameter(format!(
            "{what}: expected 1..={MAX_POINTS} points, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

/// Nearest-neighbour pairs `(observed index, model index)` in both directions.
struct Matches {
    forward: Vec<(usize, usize)>,
    backward: Vec<(usize, usize)>,
}

fn nearest<T: Real>(p: &Vec3<T>, set: &[Vec3<T>]) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (k, q) in set.iter().enumerate() {
        let d = (*p - *q).norm_squared();
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

fn matches<T: Real>(back: &[Vec3<T>], model: &[Vec3<T>]) -> Matches {
    Matches {
        forward: back.iter().enumerate().map(|(i, p)| (i, nearest(p, model))).collect(),
        backward: model.iter().enumerate().map(|(j, z)| (nearest(z, back), j)).collect(),
    }
}

/// `∂L/∂R`. Chamfer correspondences are frozen at `r`.
pub fn euclid_grad<T: Real>(loss: &LossKind<T>, r: &Rotation<T>) -> Mat3<T> {
    let two = T::c(2.0);
    match loss {
        LossKind::L2Frobenius { target } => (*r.matrix() - *target.matrix()) * two,
        LossKind::Geodesic { target } => {
            let theta = geodesic_distance(r, target);
            // dθ/dR = −R_gt / (2 sin θ); θ/sin θ is bounded away from π.
            let ratio = if theta < T::c(1e-6) {
                T::one() + theta * theta / T::c(6.0)
            } else {
                theta / theta.sin().max(T::c(1e-12))
            };
            -(*target.matrix() * ratio)
        }
        LossKind::Flow { target, points } => {
            let mut xxt = Mat3::zeros();
            for p in points {
                xxt += Mat3::outer(p, p);
            }
            (*r.matrix() - *target.matrix()) * xxt * two
        }
        LossKind::Chamfer { model, observed } => {
            let rt = r.matrix().transpose();
            let back: Vec<_> = observed.iter().map(|x| rt.mul_vec(x)).collect();
            let m = matches(&back, model);
            let mut g = Mat3::zeros();
            // ∂‖Rᵀx − z‖²/∂R = 2·x·(Rᵀx − z)ᵀ
            let w_fwd = two / T::c(back.len() as f64);
            for &(i, j) in &m.forward {
                g += Mat3::outer(&observed[i], &(back[i] - model[j])) * w_fwd;
            }
            let w_bwd = two / T::c(model.len() as f64);
            for &(i, j) in &m.backward {
                g += Mat3::outer(&observed[i], &(back[i] - model[j])) * w_bwd;
            }
            g
        }
    }
}

/// Riemannian gradient in the right-perturbation chart:
/// `φ_k = ⟨∂L/∂R, R·hat(e_k)⟩`.
pub fn riemannian_grad<T: Real>(r: &Rotation<T>, dl_dr: &Mat3<T>) -> TangentSO3<T> {
    Vec3::from_fn(|k| dl_dr.frobenius_dot(&(*r.matrix() * hat(&Vec3::axis(k)))))
}

/// One Riemannian gradient step: `R_g = R·Exp(−τ·φ)`.
pub fn goal_rotation<T: Real>(r: &Rotation<T>, grad: &TangentSO3<T>, tau: T) -> Rotation<T> {
    exp_so3(r, &(*grad * -tau))
}

/// Convenience: gradient and goal in one call.
pub fn goal_for_loss<T: Real>(loss: &LossKind<T>, r: &Rotation<T>, tau: T) -> Rotation<T> {
    goal_rotation(r, &riemannian_grad(r, &euclid_grad(loss, r)), tau)
}

/// Step size for which one step lands on the target in the small-angle limit.
pub fn tau_converge_for<T: Real>(loss: &LossKind<T>) -> Result<T> {
    match loss {
        LossKind::L2Frobenius { .. } => Ok(T::c(0.25)),
        LossKind::Geodesic { .. } => Ok(T::c(0.5)),
        other => Err(Error::NoAnalyticTau(other.name())),
    }
}

/// The per-sample step that reaches the target exactly, `R_g = R_gt`.
///
/// L2: the gradient has length `4 sin θ` along the geodesic, so `τ = θ / (4 sin θ)`.
/// Geodesic: length `2θ`, so `τ = 1/2`.
pub fn tau_gt<T: Real>(loss: &LossKind<T>, r: &Rotation<T>) -> Result<T> {
    match loss {
        LossKind::L2Frobenius { target } => {
            let theta = geodesic_distance(r, target);
            if theta < T::c(1e-6) {
                Ok(T::c(0.25) * (T::one() + theta * theta / T::c(6.0)))
            } else {
                Ok(theta / (T::c(4.0) * theta.sin().max(T::c(1e-12))))
            }
        }
        LossKind::Geodesic { .. } => Ok(T::c(0.5)),
        other => Err(Error::NoAnalyticTau(other.name())),
    }
}

/// Piecewise-constant τ ramp from `tau_init` to `tau_converge` in
/// `n_steps` uniform steps spread over `total_iters`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauSchedule<T> {
    pub tau_init: T,
    pub tau_converge: T,
    pub n_steps: usize,
    pub total_iters: usize,
}

impl<T: Real> TauSchedule<T> {
    pub fn new(tau_init: T, tau_converge: T, n_steps: usize, total_iters: usize) -> Result<Self> {
        if !(tau_init > T::zero() && tau_init <= tau_converge) {
            return Err(Error::InvalidParameter(format!(
                "tau schedule needs 0 < tau_init <= tau_converge, got {tau_init} and {tau_converge}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("tau schedule needs n_steps >= 1".into()));
        }
        Ok(Self {
            tau_init,
            tau_converge,
            n_steps,
            total_iters,
        })
    }

    pub fn constant(tau: T) -> Self {
        Self {
            tau_init: tau,
            tau_converge: tau,
            n_steps: 1,
            total_iters: 1,
        }
    }

    pub fn tau_at(&self, iter: usize) -> T {
        if self.n_steps <= 1 {
            return self.tau_converge;
        }
        let total = self.total_iters.max(1);
        let step = (iter.min(total - 1) * self.n_steps) / total;
        let inc = (self.tau_converge - self.tau_init) / T::c((self.n_steps - 1) as f64);
        (self.tau_init + inc * T::c(step as f64)).min(self.tau_converge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{log_so3, sample_uniform_rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn l2_hand_case() {
        for theta in [0.1f64, 0.7, 2.0, 3.0] {
            let loss = LossKind::l2(Rotation::about_z(theta));
            let r = Rotation::identity();
            let phi = riemannian_grad(&r, &euclid_grad(&loss, &r));
            assert!((phi - Vec3::new(0.0, 0.0, -4.0 * theta.sin())).norm() < 1e-12);
            let g = goal_rotation(&r, &phi, 0.25);
            assert!(geodesic_distance(&g, &Rotation::about_z(theta.sin())) < 1e-12);
        }
    }

    #[test]
    fn stationary_at_target() {
        let r = Rotation::about_x(0.4f64) * Rotation::about_y(-1.1);
        for loss in [LossKind::l2(r), LossKind::geodesic(r)] {
            assert!(riemannian_grad(&r, &euclid_grad(&loss, &r)).norm() < 1e-12);
        }
        let z: Vec<_> = (0..5).map(|i| Vec3::new(i as f64, (i * i) as f64 * 0.1, 1.0 - i as f64)).collect();
        let obs: Vec<_> = z.iter().map(|p| r.rotate(p)).collect();
        let loss = LossKind::chamfer(z, obs).unwrap();
        assert!(euclid_grad(&loss, &r).norm() < 1e-12);
        assert!(loss.value(&r) < 1e-24);
    }

    #[test]
    fn flow_with_unit_points_is_l2() {
        let mut g = ChaCha8Rng::seed_from_u64(1);
        let r: Rotation<f64> = sample_uniform_rotation(&mut g);
        let t: Rotation<f64> = sample_uniform_rotation(&mut g);
        let flow = LossKind::flow(t, (0..3).map(Vec3::axis).collect()).unwrap();
        let l2 = LossKind::l2(t);
        assert!((euclid_grad(&flow, &r) - euclid_grad(&l2, &r)).norm() < 1e-14);
        assert!((flow.value(&r) - l2.value(&r)).abs() < 1e-14);
    }

    #[test]
    fn geodesic_path() {
        let mut g = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            let t: Rotation<f64> = sample_uniform_rotation(&mut g);
            let goal = goal_for_loss(&LossKind::l2(t), &r, 0.1);
            let a = log_so3(&r, &goal);
            let b = log_so3(&r, &t);
            assert!(a.dot(&b) / (a.norm() * b.norm()) > 1.0 - 1e-8);
        }
    }

    #[test]
    fn schedule_staircase() {
        let s = TauSchedule::new(0.05f64, 0.25, 10, 5000).unwrap();
        assert_eq!(s.tau_at(0), 0.05);
        assert_eq!(s.tau_at(499), 0.05);
        assert!((s.tau_at(500) - (0.05 + 0.2 / 9.0)).abs() < 1e-15);
        assert_eq!(s.tau_at(4999), 0.25);
        assert_eq!(TauSchedule::new(0.1f64, 0.3, 1, 100).unwrap().tau_at(0), 0.3);
        assert!(TauSchedule::new(0.3f64, 0.1, 10, 100).is_err());
        assert!(TauSchedule::new(0.1f64, 0.3, 0, 100).is_err());
    }

    #[test]
    fn tau_values() {
        let t = Rotation::<f64>::identity();
        assert_eq!(tau_converge_for(&LossKind::l2(t)).unwrap(), 0.25);
        assert_eq!(tau_converge_for(&LossKind::geodesic(t)).unwrap(), 0.5);
        let flow = LossKind::flow(t, vec![Vec3::axis(0)]).unwrap();
        assert_eq!(tau_converge_for(&flow), Err(Error::NoAnalyticTau("flow")));
    }

    #[test]
    fn tau_gt_reaches_target() {
        let mut g = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            let t: Rotation<f64> = sample_uniform_rotation(&mut g);
            for loss in [LossKind::l2(t), LossKind::geodesic(t)] {
                let tau = tau_gt(&loss, &r).unwrap();
                let goal = goal_for_loss(&loss, &r, tau);
                assert!(geodesic_distance(&goal, &t) < 1e-9, "{}", loss.name());
            }
        }
    }

    #[test]
    fn rejects_bad_point_sets() {
        assert!(LossKind::<f64>::chamfer(vec![], vec![Vec3::axis(0)]).is_err());
        assert!(LossKind::flow(Rotation::<f64>::identity(), vec![Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
    }
}
