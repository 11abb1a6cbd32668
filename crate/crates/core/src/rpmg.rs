//! Regularized projective manifold gradient.
//!
//! Given a raw output `x` and a goal rotation `R_g`, the inverse projection
//! `x_gp` is the point of `π⁻¹(ψ(R_g))` closest to `x`. The ambient gradient
//! handed to the network is then one of
//!
//! * MG:   `x − x̂_g`
//! * PMG:  `x − x_gp`
//! * RPMG: `x − x_gp + λ·(x_gp − x̂_g)`
//!
//! where `x̂_g` is `ψ(R_g)` embedded in ambient space.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lin::{solve_dense, Mat3, SmallMatrix, Vec3, Vec4};
use crate::repr::{baseline_backward, params_to_sym4, representation_map, sym4_to_params, RawOutput, RepKind};
use crate::riemannian::{euclid_grad, goal_rotation, riemannian_grad, LossKind};
use crate::scalar::Real;
use crate::so3::{Rotation, UnitQuaternion};

pub const DEFAULT_LAMBDA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain backpropagation through `φ∘π`.
    Vanilla,
    Mg,
    Pmg,
    Rpmg,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Vanilla, Method::Mg, Method::Pmg, Method::Rpmg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Mg => "mg",
            Method::Pmg => "pmg",
            Method::Rpmg => "rpmg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown method {s:?}; expected one of vanilla, mg, pmg, rpmg"
                ))
            })
    }
}

/// Method selector and regularization weight.
///
/// `Mg` behaves as `Rpmg` with `λ = 1` and `Pmg` as `Rpmg` with `λ = 0`;
/// `lambda` is only read for `Rpmg`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RpmgParams<T> {
    pub lambda: T,
    pub method: Method,
}

impl<T: Real> Default for RpmgParams<T> {
    fn default() -> Self {
        Self {
            lambda: T::c(DEFAULT_LAMBDA),
            method: Method::Rpmg,
        }
    }
}

impl<T: Real> RpmgParams<T> {
    pub fn new(method: Method, lambda: T) -> Result<Self> {
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(Self { lambda, method })
    }

    pub fn rpmg(lambda: T) -> Result<Self> {
        Self::new(Method::Rpmg, lambda)
    }

    pub fn method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    /// The method actually applied once the `λ ∈ {0, 1}` aliases resolve.
    pub fn effective_method(&self) -> Method {
        match self.method {
            Method::Rpmg if self.lambda == T::one() => Method::Mg,
            Method::Rpmg if self.lambda == T::zero() => Method::Pmg,
            m => m,
        }
    }
}

/// A gradient in the network's output space.
#[derive(Clone, Debug, PartialEq)]
pub struct AmbientGradient<T> {
    pub rep: RepKind,
    pub g: Vec<T>,
}

impl<T: Real> AmbientGradient<T> {
    pub fn norm(&self) -> T {
        self.g.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

/// The ten parameters of `I − qqᵀ`, whose smallest eigenvector is `±q`.
pub fn map_quat_to_10d<T: Real>(q: &UnitQuaternion<T>) -> [T; 10] {
    let q = q.coords();
    let m = crate::lin::Mat4::identity() - crate::lin::Mat4::outer(q, q);
    sym4_to_params(&m)
}

/// `ψ(R_g)` embedded in ambient space, on the sheet nearest `x` for
/// quaternions.
pub fn goal_embedding<T: Real>(x: &RawOutput<T>, r_g: &Rotation<T>) -> Vec<T> {
    let mut e = representation_map(r_g, x.rep()).embed();
    if x.rep() == RepKind::Quat4 && dot(x.values(), &e) < T::zero() {
        e.iter_mut().for_each(|v| *v = -*v);
    }
    e
}

/// Result of an inverse projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection<T> {
    /// The closest ambient point mapping to the goal.
    pub x_gp: Vec<T>,
    /// The embedded goal `x̂_g`, sign-matched to `x` for quaternions.
    pub goal: Vec<T>,
    /// The eigenvalue multiplier of the 10D solution.
    pub lambda_eig: Option<T>,
}

/// Analytic inverse projection of `x` onto `π⁻¹(ψ(R_g))`.
///
/// The sign and ordering constraints of each inverse image are relaxed, so
/// `π(x_gp)` can differ from the goal when `x` is far from it.
pub fn inverse_project<T: Real>(x: &RawOutput<T>, r_g: &Rotation<T>) -> Result<Projection<T>> {
    let goal = goal_embedding(x, r_g);
    let v = x.values();
    let mut lambda_eig = None;
    let x_gp = match x.rep() {
        // The inverse image of a Euclidean representation is the point itself.
        RepKind::Euler3 | RepKind::AxisAngle3 => goal.clone(),
        RepKind::Quat4 => ray_projection(v, &goal),
        RepKind::SixD => {
            let u = Vec3::from_fn(|i| v[i]);
            let w = Vec3::from_fn(|i| v[3 + i]);
            let ug = Vec3::from_fn(|i| goal[i]);
            let wg = Vec3::from_fn(|i| goal[3 + i]);
            let a = ug * u.dot(&ug);
            let b = ug * w.dot(&ug) + wg * w.dot(&wg);
            a.0.iter().chain(b.0.iter()).copied().collect()
        }
        RepKind::NineD => {
            let m = Mat3::from_row_slice(v).expect("length checked at construction");
            let rg = *r_g.matrix();
            let s = (m * rg.transpose() + rg * m.transpose()) * T::c(0.5);
            (s * rg).to_row_vec()
        }
        RepKind::TenD => {
            let q = crate::so3::rot_to_quat(r_g);
            let (x_gp, l) = project_10d(v, q.coords())?;
            lambda_eig = Some(l);
            x_gp
        }
    };
    Ok(Projection { x_gp, goal, lambda_eig })
}

/// `(x·ê)ê` for a unit direction `ê`.
pub fn ray_projection<T: Real>(x: &[T], e: &[T]) -> Vec<T> {
    let k = dot(x, e);
    e.iter().map(|&v| v * k).collect()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&p, &q)| p * q).sum()
}

/// The linear map `θ ↦ A(θ)·q` as a 4×10 matrix.
pub fn constraint_matrix_10d<T: Real>(q: &Vec4<T>) -> [[T; 10]; 4] {
    let z = T::zero();
    let [a, b, c, d] = q.0;
    [
        [a, b, c, d, z, z, z, z, z, z],
        [z, a, z, z, b, c, d, z, z, z],
        [z, z, a, z, z, b, z, c, d, z],
        [z, z, z, a, z, z, b, z, c, d],
    ]
}

/// Least-norm `Δx` with `A(x + Δx)·q_g = λ·q_g`, minimized over `λ` too.
///
/// `K = Mᵀ(MMᵀ)⁻¹` is read off the upper-right block of the inverse of the
/// KKT matrix `[[I, Mᵀ], [M, 0]]`; then `S = K·q_g`, `T = K·A(x)·q_g`,
/// `λ = SᵀT / SᵀS` and `x_gp = x + λS − T`.
fn project_10d<T: Real>(x: &[T], q: &Vec4<T>) -> Result<(Vec<T>, T)> {
    let m = constraint_matrix_10d(q);
    let kkt = SmallMatrix::from_fn(14, 14, |i, j| match (i < 10, j < 10) {
        (true, true) => {
            if i == j {
                T::one()
            } else {
                T::zero()
            }
        }
        (true, false) => m[j - 10][i],
        (false, true) => m[i - 10][j],
        (false, false) => T::zero(),
    })?;
    let mut k = [[T::zero(); 4]; 10];
    for col in 0..4 {
        let mut rhs = [T::zero(); 14];
        rhs[10 + col] = T::one();
        let sol = solve_dense(&kkt, &rhs)?;
        for row in 0..10 {
            k[row][col] = sol[row];
        }
    }
    let apply = |v: &Vec4<T>| -> [T; 10] { std::array::from_fn(|r| (0..4).map(|c| k[r][c] * v[c]).sum()) };
    let s = apply(q);
    let t = apply(&params_to_sym4(x).mul_vec(q));
    let sts = dot(&s, &s);
    if sts < T::c(1e-12) {
        return Err(Error::DegenerateProjection(sts.to_f64_lossy()));
    }
    let stt = dot(&s, &t);
    let lambda = (stt + stt) / (sts + sts);
    let x_gp = (0..10).map(|i| x[i] + lambda * s[i] - t[i]).collect();
    Ok((x_gp, lambda))
}

/// Ambient gradient towards a given goal rotation.
///
/// `Vanilla` has no goal and is rejected here; see [`rpmg_gradient`].
pub fn gradient_to_goal<T: Real>(
    x: &RawOutput<T>,
    r_g: &Rotation<T>,
    params: &RpmgParams<T>,
) -> Result<AmbientGradient<T>> {
    let v = x.values();
    let g = match params.effective_method() {
        Method::Vanilla => {
            return Err(Error::InvalidParameter(
                "vanilla backpropagation has no goal rotation".into(),
            ))
        }
        Method::Mg => {
            let goal = goal_embedding(x, r_g);
            v.iter().zip(&goal).map(|(&a, &b)| a - b).collect()
        }
        Method::Pmg => {
            let p = inverse_project(x, r_g)?;
            v.iter().zip(&p.x_gp).map(|(&a, &b)| a - b).collect()
        }
        Method::Rpmg => {
            let p = inverse_project(x, r_g)?;
            let l = params.lambda;
            v.iter()
                .zip(p.x_gp.iter().zip(&p.goal))
                .map(|(&a, (&gp, &gl))| a - gp + l * (gp - gl))
                .collect()
        }
    };
    Ok(AmbientGradient { rep: x.rep(), g })
}

/// The gradient injected into the network for raw output `x` with current
/// rotation `r = φ(π(x))`.
pub fn rpmg_gradient<T: Real>(
    x: &RawOutput<T>,
    r: &Rotation<T>,
    loss: &LossKind<T>,
    tau: T,
    params: &RpmgParams<T>,
) -> Result<AmbientGradient<T>> {
    let dl_dr = euclid_grad(loss, r);
    if params.method == Method::Vanilla {
        return Ok(AmbientGradient {
            rep: x.rep(),
            g: baseline_backward(x, &dl_dr)?,
        });
    }
    let r_g = goal_rotation(r, &riemannian_grad(r, &dl_dr), tau);
    gradient_to_goal(x, &r_g, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{baseline_rotation, manifold_map};
    use crate::so3::{geodesic_distance, sample_uniform_rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw(rep: RepKind, x: &[f64]) -> RawOutput<f64> {
        RawOutput::from_slice(rep, x).unwrap()
    }

    #[test]
    fn quat_example() {
        let p = inverse_project(&raw(RepKind::Quat4, &[1.0, 1.0, 0.0, 0.0]), &Rotation::identity()).unwrap();
        assert_eq!(p.x_gp, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn quat_goal_sign_follows_x() {
        let x = raw(RepKind::Quat4, &[-2.0, 0.1, 0.0, 0.0]);
        let p = inverse_project(&x, &Rotation::identity()).unwrap();
        assert_eq!(p.goal, vec![-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.x_gp, vec![-2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fixed_point_on_manifold() {
        let mut g = ChaCha8Rng::seed_from_u64(4);
        for rep in RepKind::MANIFOLD {
            for _ in 0..20 {
                let r: Rotation<f64> = sample_uniform_rotation(&mut g);
                let x = representation_map(&r, rep).embed_raw();
                let p = inverse_project(&x, &r).unwrap();
                let err: f64 = p.x_gp.iter().zip(x.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-9, "{rep}: {err}");
            }
        }
    }

    #[test]
    fn nine_d_symmetric_preimage_is_fixed() {
        let mut g = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let rg: Rotation<f64> = sample_uniform_rotation(&mut g);
            let a = Mat3::from_fn(|_, _| g.random_range(-1.0..1.0));
            let s0 = a.symmetric_part();
            let x = raw(RepKind::NineD, &(s0 * *rg.matrix()).to_row_vec());
            let p = inverse_project(&x, &rg).unwrap();
            let err: f64 = p.x_gp.iter().zip(x.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn ten_d_constraint_residual() {
        let mut g = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let rg: Rotation<f64> = sample_uniform_rotation(&mut g);
            let x: Vec<f64> = (0..10).map(|_| g.random_range(-1.0..1.0)).collect();
            let p = inverse_project(&raw(RepKind::TenD, &x), &rg).unwrap();
            let q = *crate::so3::rot_to_quat(&rg).coords();
            let l = p.lambda_eig.unwrap();
            let resid = params_to_sym4(&p.x_gp).mul_vec(&q) - q * l;
            assert!(resid.norm() < 1e-8);
        }
    }

    #[test]
    fn map_quat_to_10d_examples() {
        let p = map_quat_to_10d(&UnitQuaternion::<f64>::identity());
        assert_eq!(p, [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let mut g = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            let q = crate::so3::rot_to_quat(&r);
            let back = manifold_map(&raw(RepKind::TenD, &map_quat_to_10d(&q))).unwrap();
            assert!(geodesic_distance(&crate::repr::rotation_map(&back), &r) < 1e-9);
        }
    }

    #[test]
    fn lambda_aliases() {
        let mut g = ChaCha8Rng::seed_from_u64(10);
        for rep in RepKind::MANIFOLD {
            let x: Vec<f64> = (0..rep.ambient_dim()).map(|_| g.random_range(-1.0..1.0)).collect();
            let x = raw(rep, &x);
            let rg: Rotation<f64> = sample_uniform_rotation(&mut g);
            let one = gradient_to_goal(&x, &rg, &RpmgParams::rpmg(1.0).unwrap()).unwrap();
            let mg = gradient_to_goal(&x, &rg, &RpmgParams::method(Method::Mg)).unwrap();
            assert_eq!(one, mg);
            let zero = gradient_to_goal(&x, &rg, &RpmgParams::rpmg(0.0).unwrap()).unwrap();
            let pmg = gradient_to_goal(&x, &rg, &RpmgParams::method(Method::Pmg)).unwrap();
            assert_eq!(zero, pmg);
        }
    }

    #[test]
    fn converged_gradient_vanishes() {
        let mut g = ChaCha8Rng::seed_from_u64(11);
        for rep in RepKind::MANIFOLD {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            let x = representation_map(&r, rep).embed_raw();
            let r_now = baseline_rotation(&x).unwrap();
            let loss = LossKind::l2(r);
            for m in Method::ALL {
                let grad = rpmg_gradient(&x, &r_now, &loss, 0.25, &RpmgParams::method(m)).unwrap();
                assert!(grad.norm() < 1e-7, "{rep} {m}: {}", grad.norm());
            }
        }
    }

    #[test]
    fn params_validation_and_names() {
        assert!(RpmgParams::rpmg(1.5f64).is_err());
        assert!(RpmgParams::rpmg(f64::NAN).is_err());
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sgd".parse::<Method>().is_err());
    }
}
