//! Rotation representations: manifold mappings `π` from raw network outputs,
//! rotation mappings `φ`, representation mappings `ψ`, and the ordinary
//! (autograd-style) backward pass used by the baselines.
//!
//! Ambient layouts:
//!
//! | rep          | dim | layout                                               |
//! |--------------|-----|------------------------------------------------------|
//! | `Euler3`     | 3   | intrinsic XYZ angles, `R = Rx(a)·Ry(b)·Rz(c)`        |
//! | `AxisAngle3` | 3   | rotation vector `φ`, `R = Exp(φ)`                    |
//! | `Quat4`      | 4   | scalar-first quaternion                              |
//! | `SixD`       | 6   | first column then second column                      |
//! | `NineD`      | 9   | 3×3 matrix, row-major                                |
//! | `TenD`       | 10  | upper triangle of the symmetric 4×4 `A`, row-major   |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lin::{eig_sym4, svd3, Mat3, Mat4, Vec3, Vec4};
use crate::rpmg::map_quat_to_10d;
use crate::scalar::Real;
use crate::so3::{exp_map, hat, log_map, quat_to_rot, rot_to_quat, Rotation, UnitQuaternion};

const MIN_NORM: f64 = 1e-8;
const MIN_EIGENGAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepKind {
    #[serde(rename = "euler")]
    Euler3,
    #[serde(rename = "axis-angle")]
    AxisAngle3,
    #[serde(rename = "quat")]
    Quat4,
    #[serde(rename = "6d")]
    SixD,
    #[serde(rename = "9d")]
    NineD,
    #[serde(rename = "10d")]
    TenD,
}

impl RepKind {
    pub const ALL: [RepKind; 6] = [
        RepKind::Euler3,
        RepKind::AxisAngle3,
        RepKind::Quat4,
        RepKind::SixD,
        RepKind::NineD,
        RepKind::TenD,
    ];

    /// Representations living on a non-Euclidean manifold.
    pub const MANIFOLD: [RepKind; 4] = [RepKind::Quat4, RepKind::SixD, RepKind::NineD, RepKind::TenD];

    pub fn ambient_dim(self) -> usize {
        match self {
            RepKind::Euler3 | RepKind::AxisAngle3 => 3,
            RepKind::Quat4 => 4,
            RepKind::SixD => 6,
            RepKind::NineD => 9,
            RepKind::TenD => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RepKind::Euler3 => "euler",
            RepKind::AxisAngle3 => "axis-angle",
            RepKind::Quat4 => "quat",
            RepKind::SixD => "6d",
            RepKind::NineD => "9d",
            RepKind::TenD => "10d",
        }
    }
}

impl fmt::Display for RepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let rep = match lower.as_str() {
            "euler" | "euler3" => RepKind::Euler3,
            "axis-angle" | "axisangle" | "axis-angle3" => RepKind::AxisAngle3,
            "quat" | "quat4" | "quaternion" => RepKind::Quat4,
            "6d" | "sixd" => RepKind::SixD,
            "9d" | "nined" => RepKind::NineD,
            "10d" | "tend" => RepKind::TenD,
            _ => {
                let valid: Vec<_> = RepKind::ALL.iter().map(|r| r.name()).collect();
                return Err(Error::InvalidParameter(format!(
                    "unknown representation {s:?}; expected one of {}",
                    valid.join(", ")
                )));
            }
        };
        Ok(rep)
    }
}

/// Unconstrained network output for one representation.
#[derive(Clone, Debug, PartialEq)]
pub struct RawOutput<T> {
    rep: RepKind,
    x: Vec<T>,
}

impl<T: Real> RawOutput<T> {
    pub fn new(rep: RepKind, x: Vec<T>) -> Result<Self> {
        if x.len() != rep.ambient_dim() {
            return Err(Error::Dimension(format!(
                "{rep} expects {} values, got {}",
                rep.ambient_dim(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("raw output"));
        }
        Ok(Self { rep, x })
    }

    pub fn from_slice(rep: RepKind, x: &[T]) -> Result<Self> {
        Self::new(rep, x.to_vec())
    }

    pub fn rep(&self) -> RepKind {
        self.rep
    }

    pub fn values(&self) -> &[T] {
        &self.x
    }

    pub fn into_values(self) -> Vec<T> {
        self.x
    }

    pub fn norm(&self) -> T {
        self.x.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    fn vec3_at(&self, offset: usize) -> Vec3<T> {
        Vec3::from_fn(|i| self.x[offset + i])
    }
}

/// An element of a representation manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ManifoldPoint<T> {
    Euler(Vec3<T>),
    AxisAngle(Vec3<T>),
    Quat(UnitQuaternion<T>),
    /// Orthonormal pair: the first two columns of a rotation.
    SixD { c1: Vec3<T>, c2: Vec3<T> },
    NineD(Rotation<T>),
    TenD(UnitQuaternion<T>),
}

impl<T: Real> ManifoldPoint<T> {
    pub fn rep(&self) -> RepKind {
        match self {
            ManifoldPoint::Euler(_) => RepKind::Euler3,
            ManifoldPoint::AxisAngle(_) => RepKind::AxisAngle3,
            ManifoldPoint::Quat(_) => RepKind::Quat4,
            ManifoldPoint::SixD { .. } => RepKind::SixD,
            ManifoldPoint::NineD(_) => RepKind::NineD,
            ManifoldPoint::TenD(_) => RepKind::TenD,
        }
    }

    /// Re-injects the point into ambient space. For `TenD` the quaternion
    /// is carried to the parameters of `I − qqᵀ`.
    pub fn embed(&self) -> Vec<T> {
        match self {
            ManifoldPoint::Euler(v) | ManifoldPoint::AxisAngle(v) => v.0.to_vec(),
            ManifoldPoint::Quat(q) => q.coords().0.to_vec(),
            ManifoldPoint::SixD { c1, c2 } => c1.0.iter().chain(c2.0.iter()).copied().collect(),
            ManifoldPoint::NineD(r) => r.matrix().to_row_vec(),
            ManifoldPoint::TenD(q) => map_quat_to_10d(q).to_vec(),
        }
    }

    pub fn embed_raw(&self) -> RawOutput<T> {
        RawOutput {
            rep: self.rep(),
            x: self.embed(),
        }
    }
}

/// Symmetric 4×4 `A(θ)` from its ten upper-triangle parameters.
pub fn params_to_sym4<T: Real>(p: &[T]) -> Mat4<T> {
    debug_assert_eq!(p.len(), 10);
    Mat4::from_rows([
        Vec4::new(p[0], p[1], p[2], p[3]),
        Vec4::new(p[1], p[4], p[5], p[6]),
        Vec4::new(p[2], p[5], p[7], p[8]),
        Vec4::new(p[3], p[6], p[8], p[9]),
    ])
}

/// Inverse of [`params_to_sym4`]: reads the upper triangle.
pub fn sym4_to_params<T: Real>(a: &Mat4<T>) -> [T; 10] {
    [
        a[(0, 0)],
        a[(0, 1)],
        a[(0, 2)],
        a[(0, 3)],
        a[(1, 1)],
        a[(1, 2)],
        a[(1, 3)],
        a[(2, 2)],
        a[(2, 3)],
        a[(3, 3)],
    ]
}

fn degenerate(rep: RepKind, condition: String) -> Error {
    Error::Degenerate {
        rep: rep.name(),
        condition,
    }
}

/// Gram-Schmidt on the two 3-vectors of a 6D output.
pub fn gram_schmidt<T: Real>(u: &Vec3<T>, v: &Vec3<T>) -> Result<(Vec3<T>, Vec3<T>)> {
    let min = T::c(MIN_NORM);
    let c1 = u
        .try_normalize(min)
        .ok_or_else(|| degenerate(RepKind::SixD, format!("first column norm {} <= 1e-8", u.norm())))?;
    let resid = *v - c1 * c1.dot(v);
    let c2 = resid.try_normalize(min).ok_or_else(|| {
        degenerate(
            RepKind::SixD,
            format!("Gram-Schmidt residual {} <= 1e-8", resid.norm()),
        )
    })?;
    Ok((c1, c2))
}

/// SVD orthogonalization `U·diag(1, 1, det(UVᵀ))·Vᵀ`.
pub fn svd_orthogonalize<T: Real>(m: &Mat3<T>) -> Result<Rotation<T>> {
    let svd = svd3(m)?;
    if svd.sigma[1] + svd.sigma[2] <= T::c(MIN_NORM) {
        return Err(degenerate(
            RepKind::NineD,
            format!("sigma2 + sigma3 = {} <= 1e-8", svd.sigma[1] + svd.sigma[2]),
        ));
    }
    let mut u = svd.u;
    if (svd.u * svd.v.transpose()).determinant() < T::zero() {
        u.set_col(2, -u.col(2));
    }
    Ok(Rotation::from_matrix_unchecked(u * svd.v.transpose()))
}

/// Unit eigenvector of the smallest eigenvalue of `A(θ)`, with `q₀ ≥ 0`.
pub fn smallest_eigenvector<T: Real>(params: &[T]) -> Result<UnitQuaternion<T>> {
    let a = params_to_sym4(params);
    let eig = eig_sym4(&a)?;
    let gap = eig.values[1] - eig.values[0];
    if gap <= T::c(MIN_EIGENGAP) * a.norm().max(T::one()) {
        return Err(degenerate(
            RepKind::TenD,
            format!("eigengap {gap} <= 1e-10 (relative)"),
        ));
    }
    let q = eig.vector(0);
    Ok(UnitQuaternion::from_unit_unchecked(q / q.norm()).canonical())
}

/// `π`: ambient output to manifold point.
pub fn manifold_map<T: Real>(x: &RawOutput<T>) -> Result<ManifoldPoint<T>> {
    let v = &x.x;
    Ok(match x.rep {
        RepKind::Euler3 => ManifoldPoint::Euler(x.vec3_at(0)),
        RepKind::AxisAngle3 => ManifoldPoint::AxisAngle(x.vec3_at(0)),
        RepKind::Quat4 => ManifoldPoint::Quat(UnitQuaternion::new_normalize(Vec4::from_fn(|i| v[i]))?),
        RepKind::SixD => {
            let (c1, c2) = gram_schmidt(&x.vec3_at(0), &x.vec3_at(3))?;
            ManifoldPoint::SixD { c1, c2 }
        }
        RepKind::NineD => {
            let m = Mat3::from_row_slice(v).expect("length checked at construction");
            ManifoldPoint::NineD(svd_orthogonalize(&m)?)
        }
        RepKind::TenD => ManifoldPoint::TenD(smallest_eigenvector(v)?),
    })
}

/// `R = Rx(a)·Ry(b)·Rz(c)`.
pub fn euler_xyz_to_rot<T: Real>(angles: &Vec3<T>) -> Rotation<T> {
    Rotation::about_x(angles[0]) * Rotation::about_y(angles[1]) * Rotation::about_z(angles[2])
}

/// Inverse of [`euler_xyz_to_rot`] with `b ∈ [−π/2, π/2]`; at gimbal lock
/// the third angle is set to zero.
pub fn rot_to_euler_xyz<T: Real>(r: &Rotation<T>) -> Vec3<T> {
    let m = r.matrix();
    let sb = m[(0, 2)].max(-T::one()).min(T::one());
    let b = sb.asin();
    if T::one() - sb.abs() < T::c(1e-12) {
        let a = m[(2, 1)].atan2(m[(1, 1)]);
        return Vec3::new(a, b, T::zero());
    }
    let a = (-m[(1, 2)]).atan2(m[(2, 2)]);
    let c = (-m[(0, 1)]).atan2(m[(0, 0)]);
    Vec3::new(a, b, c)
}

/// `φ`: manifold point to rotation.
pub fn rotation_map<T: Real>(p: &ManifoldPoint<T>) -> Rotation<T> {
    match p {
        ManifoldPoint::Euler(a) => euler_xyz_to_rot(a),
        ManifoldPoint::AxisAngle(phi) => exp_map(phi),
        ManifoldPoint::Quat(q) | ManifoldPoint::TenD(q) => quat_to_rot(q),
        ManifoldPoint::SixD { c1, c2 } => {
            Rotation::from_matrix_unchecked(Mat3::from_cols([*c1, *c2, c1.cross(c2)]))
        }
        ManifoldPoint::NineD(r) => *r,
    }
}

/// `ψ`: rotation to manifold point, with `φ(ψ(R)) = R`.
pub fn representation_map<T: Real>(r: &Rotation<T>, rep: RepKind) -> ManifoldPoint<T> {
    match rep {
        RepKind::Euler3 => ManifoldPoint::Euler(rot_to_euler_xyz(r)),
        RepKind::AxisAngle3 => ManifoldPoint::AxisAngle(log_map(r)),
        RepKind::Quat4 => ManifoldPoint::Quat(rot_to_quat(r)),
        RepKind::SixD => ManifoldPoint::SixD {
            c1: r.matrix().col(0),
            c2: r.matrix().col(1),
        },
        RepKind::NineD => ManifoldPoint::NineD(*r),
        RepKind::TenD => ManifoldPoint::TenD(rot_to_quat(r)),
    }
}

/// Full forward pass `φ(π(x))`.
pub fn baseline_rotation<T: Real>(x: &RawOutput<T>) -> Result<Rotation<T>> {
    Ok(rotation_map(&manifold_map(x)?))
}

/// `∂L/∂x` given `∂L/∂R`, i.e. the chain rule through `φ∘π`.
///
/// Euler, quaternion and 6D use closed-form Jacobians; axis-angle, 9D and
/// 10D use central differences of `⟨∂L/∂R, φ(π(x))⟩` with step `1e-5`.
pub fn baseline_backward<T: Real>(x: &RawOutput<T>, dl_dr: &Mat3<T>) -> Result<Vec<T>> {
    match x.rep {
        RepKind::Euler3 => Ok(euler_backward(&x.vec3_at(0), dl_dr).0.to_vec()),
        RepKind::Quat4 => quat_backward(x, dl_dr),
        RepKind::SixD => six_d_backward(x, dl_dr),
        RepKind::AxisAngle3 | RepKind::NineD | RepKind::TenD => fd_backward(x, dl_dr),
    }
}

fn euler_backward<T: Real>(angles: &Vec3<T>, g: &Mat3<T>) -> Vec3<T> {
    let rx = *Rotation::about_x(angles[0]).matrix();
    let ry = *Rotation::about_y(angles[1]).matrix();
    let rz = *Rotation::about_z(angles[2]).matrix();
    let [ex, ey, ez] = [0, 1, 2].map(|k| hat(&Vec3::<T>::axis(k)));
    Vec3::new(
        g.frobenius_dot(&(rx * ex * ry * rz)),
        g.frobenius_dot(&(rx * ry * ey * rz)),
        g.frobenius_dot(&(rx * ry * rz * ez)),
    )
}

/// Partial derivatives of the quaternion-to-matrix map, one per component.
fn quat_jacobian<T: Real>(q: &Vec4<T>) -> [Mat3<T>; 4] {
    let two = T::c(2.0);
    let four = T::c(4.0);
    let z = T::zero();
    let [q0, q1, q2, q3] = q.0;
    let m = |r: [[T; 3]; 3]| crate::lin::Matrix(r);
    [
        m([
            [four * q0, -two * q3, two * q2],
            [two * q3, four * q0, -two * q1],
            [-two * q2, two * q1, four * q0],
        ]),
        m([
            [four * q1, two * q2, two * q3],
            [two * q2, z, -two * q0],
            [two * q3, two * q0, z],
        ]),
        m([
            [z, two * q1, two * q0],
            [two * q1, four * q2, two * q3],
            [-two * q0, two * q3, z],
        ]),
        m([
            [z, -two * q0, two * q1],
            [two * q0, z, two * q2],
            [two * q1, two * q2, four * q3],
        ]),
    ]
}

fn quat_backward<T: Real>(x: &RawOutput<T>, g: &Mat3<T>) -> Result<Vec<T>> {
    let raw = Vec4::from_fn(|i| x.x[i]);
    let q = *UnitQuaternion::new_normalize(raw)?.coords();
    let jac = quat_jacobian(&q);
    let dq = Vec4::from_fn(|i| g.frobenius_dot(&jac[i]));
    // d(x/‖x‖) = (I − qqᵀ)/‖x‖
    let dx = (dq - q * q.dot(&dq)) / raw.norm();
    Ok(dx.0.to_vec())
}

fn six_d_backward<T: Real>(x: &RawOutput<T>, g: &Mat3<T>) -> Result<Vec<T>> {
    let a = x.vec3_at(0);
    let b = x.vec3_at(3);
    let (c1, c2) = gram_schmidt(&a, &b)?;
    let (g1, g2, g3) = (g.col(0), g.col(1), g.col(2));
    // c3 = c1 × c2
    let mut gc1 = g1 + c2.cross(&g3);
    let gc2 = g2 + g3.cross(&c1);
    // c2 = b'/‖b'‖ with b' = b − (c1·b)c1
    let bp = b - c1 * c1.dot(&b);
    let gbp = (gc2 - c2 * c2.dot(&gc2)) / bp.norm();
    let gb = gbp - c1 * c1.dot(&gbp);
    gc1 -= gbp * c1.dot(&b) + b * c1.dot(&gbp);
    // c1 = a/‖a‖
    let ga = (gc1 - c1 * c1.dot(&gc1)) / a.norm();
    Ok(ga.0.iter().chain(gb.0.iter()).copied().collect())
}

fn fd_backward<T: Real>(x: &RawOutput<T>, g: &Mat3<T>) -> Result<Vec<T>> {
    let h = T::fd_step();
    let mut probe = x.clone();
    let mut out = Vec::with_capacity(x.x.len());
    for i in 0..x.x.len() {
        let xi = x.x[i];
        probe.x[i] = xi + h;
        let plus = g.frobenius_dot(baseline_rotation(&probe)?.matrix());
        probe.x[i] = xi - h;
        let minus = g.frobenius_dot(baseline_rotation(&probe)?.matrix());
        probe.x[i] = xi;
        out.push((plus - minus) / (T::c(2.0) * h));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{geodesic_distance, sample_uniform_rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn raw(rep: RepKind, x: &[f64]) -> RawOutput<f64> {
        RawOutput::from_slice(rep, x).unwrap()
    }

    #[test]
    fn quat_normalizes() {
        let p = manifold_map(&raw(RepKind::Quat4, &[0.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(p.embed(), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            manifold_map(&raw(RepKind::Quat4, &[0.0, 1e-9, 0.0, 0.0])),
            Err(Error::Degenerate { rep: "quat", .. })
        ));
    }

    #[test]
    fn nine_d_identity_and_reflection() {
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let r = baseline_rotation(&raw(RepKind::NineD, &id)).unwrap();
        assert!((*r.matrix() - Mat3::identity()).norm() < 1e-15);

        let refl = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0];
        let r = baseline_rotation(&raw(RepKind::NineD, &refl)).unwrap();
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
        assert!(Rotation::from_matrix(*r.matrix()).is_ok());
    }

    #[test]
    fn nine_d_rank_one_is_degenerate() {
        let m = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 3.0, 6.0, 9.0];
        assert!(matches!(
            manifold_map(&raw(RepKind::NineD, &m)),
            Err(Error::Degenerate { rep: "9d", .. })
        ));
    }

    #[test]
    fn six_d_degenerate_cases() {
        assert!(manifold_map(&raw(RepKind::SixD, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0])).is_err());
        assert!(manifold_map(&raw(RepKind::SixD, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0])).is_err());
        let p = manifold_map(&raw(RepKind::SixD, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(rotation_map(&p), Rotation::identity());
    }

    #[test]
    fn ten_d_recovers_planted_eigenvector() {
        let mut g = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let r: Rotation<f64> = sample_uniform_rotation(&mut g);
            let q = rot_to_quat(&r);
            // A = Q diag(λ) Qᵀ with q as the first column of an orthonormal Q.
            let mut basis = vec![*q.coords()];
            while basis.len() < 4 {
                let mut v = Vec4::from_fn(|_| g.random_range(-1.0..1.0));
                for b in &basis {
                    v -= *b * b.dot(&v);
                }
                if let Some(v) = v.try_normalize(1e-3) {
                    basis.push(v);
                }
            }
            let lambdas = [-1.0, 0.5, 2.0, 3.0];
            let mut a = Mat4::zeros();
            for (b, l) in basis.iter().zip(lambdas) {
                a += Mat4::outer(b, b) * l;
            }
            let got = smallest_eigenvector(&sym4_to_params(&a)).unwrap();
            let err = (*got.coords() - *q.coords()).norm().min((*got.coords() + *q.coords()).norm());
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn ten_d_repeated_eigenvalue_errors() {
        let p = sym4_to_params(&Mat4::<f64>::identity());
        assert!(matches!(
            smallest_eigenvector(&p),
            Err(Error::Degenerate { rep: "10d", .. })
        ));
    }

    #[test]
    fn representation_examples() {
        let id = Rotation::<f64>::identity();
        assert_eq!(
            representation_map(&id, RepKind::SixD).embed(),
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        );
        let theta = 1.2f64;
        let q = representation_map(&Rotation::about_z(theta), RepKind::Quat4).embed();
        let want = [(theta / 2.0).cos(), 0.0, 0.0, (theta / 2.0).sin()];
        for (a, b) in q.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let r = Rotation::about_y(0.4) * Rotation::about_x(-1.0);
        assert_eq!(representation_map(&r, RepKind::NineD), ManifoldPoint::NineD(r));
    }

    #[test]
    fn baseline_examples() {
        let r = baseline_rotation(&raw(RepKind::AxisAngle3, &[0.0, 0.0, PI / 2.0])).unwrap();
        assert!(geodesic_distance(&r, &Rotation::about_z(PI / 2.0)) < 1e-15);
        let r = baseline_rotation(&raw(RepKind::Euler3, &[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(r, Rotation::identity());
    }

    #[test]
    fn euler_round_trip_including_gimbal_lock() {
        let mut g = ChaCha8Rng::seed_from_u64(5);
        let mut cases: Vec<Rotation<f64>> = (0..200).map(|_| sample_uniform_rotation(&mut g)).collect();
        cases.push(euler_xyz_to_rot(&Vec3::new(0.3, PI / 2.0, -0.2)));
        cases.push(euler_xyz_to_rot(&Vec3::new(-1.0, -PI / 2.0, 0.7)));
        for r in cases {
            let back = euler_xyz_to_rot(&rot_to_euler_xyz(&r));
            assert!(geodesic_distance(&back, &r) < 1e-7);
        }
    }

    #[test]
    fn zero_upstream_gradient() {
        for rep in RepKind::ALL {
            let x = representation_map(&Rotation::about_x(0.3f64), rep).embed_raw();
            let g = baseline_backward(&x, &Mat3::zeros()).unwrap();
            assert!(g.iter().all(|v| *v == 0.0), "{rep}");
        }
    }

    #[test]
    fn rep_names_round_trip() {
        for rep in RepKind::ALL {
            assert_eq!(rep.name().parse::<RepKind>().unwrap(), rep);
        }
        assert!("bogus".parse::<RepKind>().is_err());
    }
}
