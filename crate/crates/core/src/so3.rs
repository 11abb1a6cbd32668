//! SO(3): exponential and logarithm maps, geodesic distance, quaternion
//! conversions and Haar-uniform sampling.
//!
//! Tangent vectors are plain 3-vectors `φ` identified with skew matrices via
//! [`hat`]. Perturbations are applied on the right: `exp_so3(R, φ) = R·Exp(φ)`,
//! so `φ` lives in the body frame of `R`.

use std::ops::Mul;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{norm_condition, Error, Result};
use crate::lin::{Mat3, Vec3, Vec4};
use crate::scalar::Real;

/// Tangent vector at a rotation; its norm is the rotation angle in radians.
pub type TangentSO3<T> = Vec3<T>;

/// Below this angle the Rodrigues coefficients use their Taylor expansions.
const SMALL_ANGLE: f64 = 1e-6;
/// Within this distance of π the logarithm switches to the eigenvector branch.
const NEAR_PI: f64 = 1e-6;

/// A 3×3 orthonormal matrix with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T>(Mat3<T>);

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Accepts `m` if `‖mᵀm − I‖ ≤ 1e-9` and `|det m − 1| ≤ 1e-9`.
    pub fn from_matrix(m: Mat3<T>) -> Result<Self> {
        let tol = T::tol(1e-9);
        let ortho = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if !m.is_finite() || ortho > tol || (det - T::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "not a rotation: orthogonality residual {ortho}, det {det}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps `m` without checking. Callers guarantee `m ∈ SO(3)` up to
    /// rounding.
    pub fn from_matrix_unchecked(m: Mat3<T>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Mat3<T> {
        self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn rotate(&self, p: &Vec3<T>) -> Vec3<T> {
        self.0.mul_vec(p)
    }

    pub fn about_x(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self(Mat3::from_rows([
            Vec3::new(o, z, z),
            Vec3::new(z, c, -s),
            Vec3::new(z, s, c),
        ]))
    }

    pub fn about_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self(Mat3::from_rows([
            Vec3::new(c, z, s),
            Vec3::new(z, o, z),
            Vec3::new(-s, z, c),
        ]))
    }

    pub fn about_z(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self(Mat3::from_rows([
            Vec3::new(c, -s, z),
            Vec3::new(s, c, z),
            Vec3::new(z, z, o),
        ]))
    }

    /// Projects a nearly orthonormal matrix back onto SO(3) via the polar
    /// factor. Used to scrub accumulated rounding drift.
    pub fn renormalized(&self) -> Self {
        match crate::lin::svd3(&self.0) {
            Ok(svd) => {
                let mut u = svd.u;
                if (svd.u * svd.v.transpose()).determinant() < T::zero() {
                    u.set_col(2, -u.col(2));
                }
                Self(u * svd.v.transpose())
            }
            Err(_) => *self,
        }
    }
}

impl<T: Real> Mul for Rotation<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self(self.0 * o.0)
    }
}

/// Scalar-first unit quaternion `(q₀, q₁, q₂, q₃)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitQuaternion<T>(Vec4<T>);

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self(Vec4::axis(0))
    }

    /// Normalizes `v`; fails when `‖v‖ ≤ 1e-8`.
    pub fn new_normalize(v: Vec4<T>) -> Result<Self> {
        v.try_normalize(T::c(1e-8))
            .map(Self)
            .ok_or_else(|| Error::Degenerate {
                rep: "quat",
                condition: norm_condition(v.norm()),
            })
    }

    pub fn from_unit_unchecked(v: Vec4<T>) -> Self {
        Self(v)
    }

    pub fn coords(&self) -> &Vec4<T> {
        &self.0
    }

    pub fn scalar(&self) -> T {
        self.0[0]
    }

    /// The representative with `q₀ > 0`; when `q₀ = 0` the first nonzero
    /// component is made positive.
    pub fn canonical(&self) -> Self {
        let lead = self
            .0
             .0
            .iter()
            .copied()
            .find(|v| *v != T::zero())
            .unwrap_or_else(T::one);
        if lead < T::zero() {
            Self(-self.0)
        } else {
            *self
        }
    }
}

impl<T: Real> std::ops::Neg for UnitQuaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// `φ ↦ φ^∧`, the skew matrix with `hat(φ)·w = φ × w`.
pub fn hat<T: Real>(phi: &Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    let [x, y, w] = phi.0;
    Mat3::from_rows([
        Vec3::new(z, -w, y),
        Vec3::new(w, z, -x),
        Vec3::new(-y, x, z),
    ])
}

/// Inverse of [`hat`] applied to the skew part of `m`.
pub fn vee<T: Real>(m: &Mat3<T>) -> Vec3<T> {
    let half = T::c(0.5);
    Vec3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// Rodrigues formula `Exp(φ) = I + a·φ^∧ + b·(φ^∧)²` with
/// `a = sin θ/θ`, `b = (1 − cos θ)/θ²`.
pub fn exp_map<T: Real>(phi: &TangentSO3<T>) -> Rotation<T> {
    let theta2 = phi.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < T::c(SMALL_ANGLE) {
        (
            T::one() - theta2 / T::c(6.0),
            T::c(0.5) - theta2 / T::c(24.0),
        )
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (T::one() - c) / theta2)
    };
    let k = hat(phi);
    Rotation(Mat3::identity() + k * a + (k * k) * b)
}

/// Retraction `R·Exp(φ)`.
pub fn exp_so3<T: Real>(r: &Rotation<T>, phi: &TangentSO3<T>) -> Rotation<T> {
    *r * exp_map(phi)
}

/// Which formula [`log_map_detailed`] used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBranch {
    SmallAngle,
    Regular,
    /// Angle within `1e-6` of π; axis taken from the dominant eigenvector of
    /// `(R + I)/2`.
    NearPi,
}

/// `Log(R)` as a tangent vector with norm in `[0, π]`, plus the branch taken.
pub fn log_map_detailed<T: Real>(r: &Rotation<T>) -> (TangentSO3<T>, LogBranch) {
    let m = r.matrix();
    let s = vee(m); // sin θ · ω
    let cos = (m.trace() - T::one()) * T::c(0.5);
    let theta = s.norm().atan2(cos);
    if theta < T::c(SMALL_ANGLE) {
        return (s * (T::one() + theta * theta / T::c(6.0)), LogBranch::SmallAngle);
    }
    if T::PI() - theta < T::c(NEAR_PI) {
        // sym((R + I)/2) = ((1 + cos θ)I + (1 − cos θ)ωωᵀ)/2, which is ωωᵀ up
        // to O((π − θ)²); pick the best-conditioned column.
        let b = (*m + Mat3::identity()).symmetric_part() * T::c(0.5);
        let k = (0..3)
            .max_by(|&i, &j| b[(i, i)].partial_cmp(&b[(j, j)]).expect("finite"))
            .unwrap_or(0);
        let mut axis = b.col(k).try_normalize(T::zero()).unwrap_or(Vec3::axis(k));
        if axis.dot(&s) < T::zero() {
            axis = -axis;
        }
        return (axis * theta, LogBranch::NearPi);
    }
    (s * (theta / theta.sin()), LogBranch::Regular)
}

pub fn log_map<T: Real>(r: &Rotation<T>) -> TangentSO3<T> {
    log_map_detailed(r).0
}

/// The tangent vector at `r1` pointing to `r2`: `Log(r1ᵀ·r2)`.
pub fn log_so3<T: Real>(r1: &Rotation<T>, r2: &Rotation<T>) -> TangentSO3<T> {
    log_map(&(r1.inverse() * *r2))
}

/// Angle of `r1ᵀ·r2` in `[0, π]`.
///
/// Computed as `atan2(‖vee‖, (tr − 1)/2)`, which stays accurate for tiny
/// angles where `acos` loses half the digits.
pub fn geodesic_distance<T: Real>(r1: &Rotation<T>, r2: &Rotation<T>) -> T {
    let rel = r1.matrix().transpose() * *r2.matrix();
    let cos = (rel.trace() - T::one()) * T::c(0.5);
    vee(&rel).norm().atan2(cos)
}

/// Standard quaternion-to-matrix map. `q` and `−q` give the same matrix
/// because every entry is quadratic in `q`.
pub fn quat_to_rot<T: Real>(q: &UnitQuaternion<T>) -> Rotation<T> {
    let [q0, q1, q2, q3] = q.0 .0;
    let two = T::c(2.0);
    let one = T::one();
    Rotation(Mat3::from_rows([
        Vec3::new(
            two * (q0 * q0 + q1 * q1) - one,
            two * (q1 * q2 - q0 * q3),
            two * (q1 * q3 + q0 * q2),
        ),
        Vec3::new(
            two * (q1 * q2 + q0 * q3),
            two * (q0 * q0 + q2 * q2) - one,
            two * (q2 * q3 - q0 * q1),
        ),
        Vec3::new(
            two * (q1 * q3 - q0 * q2),
            two * (q2 * q3 + q0 * q1),
            two * (q0 * q0 + q3 * q3) - one,
        ),
    ]))
}

/// Matrix-to-quaternion conversion choosing the largest of `1 + tr`,
/// `1 + 2Rᵢᵢ − tr` as the pivot, then canonicalized to `q₀ ≥ 0`.
pub fn rot_to_quat<T: Real>(r: &Rotation<T>) -> UnitQuaternion<T> {
    let m = r.matrix();
    let tr = m.trace();
    let one = T::one();
    let two = T::c(2.0);
    let quarter = T::c(0.25);
    let pivots = [
        one + tr,
        one + two * m[(0, 0)] - tr,
        one + two * m[(1, 1)] - tr,
        one + two * m[(2, 2)] - tr,
    ];
    let k = (0..4)
        .max_by(|&i, &j| pivots[i].partial_cmp(&pivots[j]).expect("finite"))
        .unwrap_or(0);
    let s = pivots[k].max(T::zero()).sqrt() * two; // 4·|q_k|
    let q = match k {
        0 => Vec4::new(
            quarter * s,
            (m[(2, 1)] - m[(1, 2)]) / s,
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(1, 0)] - m[(0, 1)]) / s,
        ),
        1 => Vec4::new(
            (m[(2, 1)] - m[(1, 2)]) / s,
            quarter * s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
        ),
        2 => Vec4::new(
            (m[(0, 2)] - m[(2, 0)]) / s,
            (m[(0, 1)] + m[(1, 0)]) / s,
            quarter * s,
            (m[(1, 2)] + m[(2, 1)]) / s,
        ),
        _ => Vec4::new(
            (m[(1, 0)] - m[(0, 1)]) / s,
            (m[(0, 2)] + m[(2, 0)]) / s,
            (m[(1, 2)] + m[(2, 1)]) / s,
            quarter * s,
        ),
    };
    // The pivot keeps ‖q‖ within rounding of 1; renormalize anyway.
    UnitQuaternion(q / q.norm()).canonical()
}

/// Single-branch conversion `q₀ = √(1 + tr)/2`, `qᵢ = (skew)/(4q₀)`.
///
/// Only valid away from 180° rotations; returns `None` when `1 + tr ≤ 0.1`
/// (trace below −0.9).
pub fn rot_to_quat_trace_form<T: Real>(r: &Rotation<T>) -> Option<UnitQuaternion<T>> {
    let m = r.matrix();
    let t = T::one() + m.trace();
    if t <= T::c(0.1) {
        return None;
    }
    let q0 = t.sqrt() * T::c(0.5);
    let d = T::c(4.0) * q0;
    Some(UnitQuaternion(Vec4::new(
        q0,
        (m[(2, 1)] - m[(1, 2)]) / d,
        (m[(0, 2)] - m[(2, 0)]) / d,
        (m[(1, 0)] - m[(0, 1)]) / d,
    )))
}

/// Haar-uniform rotation: four standard normals normalized to a quaternion.
pub fn sample_uniform_rotation<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Rotation<T> {
    loop {
        let v = Vec4::from_fn(|_| T::c(rng.sample::<f64, _>(StandardNormal)));
        if let Ok(q) = UnitQuaternion::new_normalize(v) {
            return quat_to_rot(&q);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lin::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn hat_of_z_axis() {
        assert_eq!(hat(&Vec3::<f64>::zeros()), Mat3::zeros());
        let h = hat(&Vec3::<f64>::axis(2));
        assert_eq!(
            h,
            Matrix([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        );
    }

    #[test]
    fn hat_matches_cross_product() {
        let mut g = rng();
        for _ in 0..100 {
            let p = Vec3::<f64>::from_fn(|_| g.random_range(-2.0..2.0));
            let w = Vec3::<f64>::from_fn(|_| g.random_range(-2.0..2.0));
            assert!((hat(&p) * w - p.cross(&w)).norm() < 1e-14);
            assert_eq!(vee(&hat(&p)), p);
        }
    }

    #[test]
    fn exp_quarter_turn_about_z() {
        let r = exp_so3(&Rotation::identity(), &Vec3::new(0.0, 0.0, PI / 2.0));
        let expected = Matrix([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!((*r.matrix() - expected).norm() < 1e-15);
        assert_eq!(exp_so3(&r, &Vec3::zeros()), r);
    }

    #[test]
    fn log_of_z_rotation() {
        let phi = log_so3(&Rotation::identity(), &Rotation::about_z(0.3));
        assert!((phi - Vec3::new(0.0, 0.0, 0.3)).norm() < 1e-15);
        let r = Rotation::about_x(1.1);
        assert_eq!(log_so3(&r, &r), Vec3::zeros());
    }

    #[test]
    fn log_near_pi_takes_eigen_branch() {
        let axis = Vec3::new(1.0f64, -2.0, 0.5).try_normalize(0.0).unwrap();
        for delta in [0.0, 1e-9, 5e-7] {
            let phi = axis * (PI - delta);
            let (back, branch) = log_map_detailed(&exp_map(&phi));
            assert_eq!(branch, LogBranch::NearPi);
            // At exactly π the sign of the axis is arbitrary.
            let err = (back - phi).norm().min((back + phi).norm());
            assert!(err < 1e-7, "delta {delta}: {err}");
            if delta > 0.0 {
                assert!((back - phi).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        for theta in [1e-9, 9.9e-7, 1.01e-6, 1e-4] {
            let phi = Vec3::new(0.3f64, -0.4, 0.5).try_normalize(0.0).unwrap() * theta;
            let back = log_map(&exp_map(&phi));
            assert!((back - phi).norm() < 1e-15 * theta.max(1e-3) * 10.0);
        }
    }

    #[test]
    fn geodesic_distance_trace_case() {
        let d = geodesic_distance(&Rotation::identity(), &Rotation::about_z(1.0f64));
        assert!((d - 1.0).abs() < 1e-15);
        let d = geodesic_distance(&Rotation::identity(), &Rotation::about_z(1e-9f64));
        assert!((d - 1e-9).abs() < 1e-22);
    }

    #[test]
    fn quaternion_of_z_rotation() {
        let theta = 0.7f64;
        let q = UnitQuaternion::from_unit_unchecked(Vec4::new(
            (theta / 2.0).cos(),
            0.0,
            0.0,
            (theta / 2.0).sin(),
        ));
        let r = quat_to_rot(&q);
        assert!((*r.matrix() - *Rotation::about_z(theta).matrix()).norm() < 1e-15);
        assert_eq!(quat_to_rot(&q), quat_to_rot(&-q));
        assert_eq!(quat_to_rot(&UnitQuaternion::<f64>::identity()), Rotation::identity());
        let back = rot_to_quat(&r);
        assert!((*back.coords() - *q.coords()).norm() < 1e-15);
    }

    #[test]
    fn canonical_sign_tie_break() {
        let q = UnitQuaternion::from_unit_unchecked(Vec4::new(0.0, 0.0, -1.0, 0.0));
        assert_eq!(q.canonical().coords(), &Vec4::new(0.0, 0.0, 1.0, 0.0));
        let q = UnitQuaternion::from_unit_unchecked(Vec4::new(-0.6, 0.8, 0.0, 0.0));
        assert_eq!(q.canonical().coords(), &Vec4::new(0.6, -0.8, 0.0, 0.0));
    }

    #[test]
    fn trace_form_agrees_with_four_branch() {
        let mut g = rng();
        let mut compared = 0;
        for _ in 0..500 {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            if let Some(q) = rot_to_quat_trace_form(&r) {
                compared += 1;
                assert!((*q.coords() - *rot_to_quat(&r).coords()).norm() < 1e-12);
            }
        }
        assert!(compared > 400);
    }

    #[test]
    fn sampler_is_deterministic() {
        let a: Rotation<f64> = sample_uniform_rotation(&mut rng());
        let b: Rotation<f64> = sample_uniform_rotation(&mut rng());
        assert_eq!(a, b);
        assert!(Rotation::from_matrix(*a.matrix()).is_ok());
    }

    #[test]
    fn from_matrix_rejects_reflection() {
        let m = Mat3::from_diagonal(&Vec3::new(1.0f64, 1.0, -1.0));
        assert!(Rotation::<f64>::from_matrix(m).is_err());
    }

    #[test]
    fn single_precision_round_trip() {
        let phi = Vec3::<f32>::new(0.2, -0.5, 0.9);
        let back = log_map(&exp_map(&phi));
        assert!((back - phi).norm() < 1e-5);
    }
}
