//! Unit-vector regression on S².

use crate::error::{norm_condition, Error, Result};
use crate::lin::Vec3;
use crate::rpmg::ray_projection;
use crate::scalar::Real;

const MIN_NORM: f64 = 1e-8;

/// A point of S².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector3<T>(Vec3<T>);

/// A tangent vector; callers keep it orthogonal to its base point.
pub type TangentS2<T> = Vec3<T>;

impl<T: Real> UnitVector3<T> {
    pub fn new_normalize(v: Vec3<T>) -> Result<Self> {
        s2_map(&v)
    }

    pub fn from_unit_unchecked(v: Vec3<T>) -> Self {
        Self(v)
    }

    pub fn axis(k: usize) -> Self {
        Self(Vec3::axis(k))
    }

    pub fn vec(&self) -> &Vec3<T> {
        &self.0
    }

    /// Angle to another unit vector, in `[0, π]`.
    pub fn angle_to(&self, other: &Self) -> T {
        self.0.cross(&other.0).norm().atan2(self.0.dot(&other.0))
    }
}

/// `x / ‖x‖`.
pub fn s2_map<T: Real>(x: &Vec3<T>) -> Result<UnitVector3<T>> {
    x.try_normalize(T::c(MIN_NORM))
        .map(UnitVector3)
        .ok_or_else(|| Error::Degenerate {
            rep: "s2",
            condition: norm_condition(x.norm()),
        })
}

/// `cos‖v‖·x̂ + sin‖v‖·v/‖v‖`.
pub fn s2_exp<T: Real>(x: &UnitVector3<T>, v: &TangentS2<T>) -> UnitVector3<T> {
    let n = v.norm();
    let (c, sinc) = if n < T::c(1e-6) {
        let n2 = n * n;
        (T::one() - n2 / T::c(2.0), T::one() - n2 / T::c(6.0))
    } else {
        (n.cos(), n.sin() / n)
    };
    let y = x.0 * c + *v * sinc;
    // Renormalize away rounding; the exact result is unit.
    UnitVector3(y / y.norm())
}

/// Riemannian gradient of `‖x̂ − x̂_gt‖²`: `2((x̂·x̂_gt)x̂ − x̂_gt)`.
pub fn s2_riemannian_grad<T: Real>(x: &UnitVector3<T>, gt: &UnitVector3<T>) -> TangentS2<T> {
    (x.0 * x.0.dot(&gt.0) - gt.0) * T::c(2.0)
}

/// The same gradient assembled in an orthonormal tangent basis `(c1, c2)`.
pub fn s2_riemannian_grad_in_basis<T: Real>(
    x: &UnitVector3<T>,
    gt: &UnitVector3<T>,
    c1: &Vec3<T>,
    c2: &Vec3<T>,
) -> TangentS2<T> {
    let e = (x.0 - gt.0) * T::c(2.0);
    *c1 * e.dot(c1) + *c2 * e.dot(c2)
}

/// True when `gt` is (numerically) the antipode of `x`, where the gradient
/// vanishes although the loss is maximal.
pub fn is_antipodal<T: Real>(x: &UnitVector3<T>, gt: &UnitVector3<T>) -> bool {
    x.0.dot(&gt.0) < T::c(-1.0 + 1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct S2Gradient<T> {
    pub g: Vec3<T>,
    pub goal: UnitVector3<T>,
    pub antipodal: bool,
}

/// `x − x_gp + λ(x_gp − x̂_g)` with `x̂_g = Exp_x̂(−τ·grad)` and
/// `x_gp = (x·x̂_g)x̂_g`.
pub fn s2_rpmg_gradient<T: Real>(x: &Vec3<T>, gt: &UnitVector3<T>, tau: T, lambda: T) -> Result<S2Gradient<T>> {
    let xh = s2_map(x)?;
    if is_antipodal(&xh, gt) {
        return Ok(S2Gradient {
            g: Vec3::zeros(),
            goal: xh,
            antipodal: true,
        });
    }
    let goal = s2_exp(&xh, &(s2_riemannian_grad(&xh, gt) * -tau));
    let x_gp = Vec3::from_slice(&ray_projection(&x.0, &goal.0 .0)).expect("three components");
    let g = *x - x_gp + (x_gp - goal.0) * lambda;
    Ok(S2Gradient {
        g,
        goal,
        antipodal: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn map_examples() {
        assert_eq!(s2_map(&Vec3::new(0.0, 0.0, 3.0)).unwrap(), UnitVector3::axis(2));
        assert!(s2_map(&Vec3::new(0.0, 1e-9, 0.0f64)).is_err());
    }

    #[test]
    fn exp_examples() {
        let e3 = UnitVector3::<f64>::axis(2);
        assert_eq!(s2_exp(&e3, &Vec3::zeros()), e3);
        let y = s2_exp(&e3, &Vec3::new(PI / 2.0, 0.0, 0.0));
        assert!((y.0 - Vec3::axis(0)).norm() < 1e-15);
    }

    #[test]
    fn grad_examples() {
        let e3 = UnitVector3::<f64>::axis(2);
        let e1 = UnitVector3::<f64>::axis(0);
        assert_eq!(s2_riemannian_grad(&e3, &e1), Vec3::new(-2.0, 0.0, 0.0));
        assert_eq!(s2_riemannian_grad(&e3, &e3), Vec3::zeros());
        let anti = UnitVector3::from_unit_unchecked(-e3.0);
        assert_eq!(s2_riemannian_grad(&e3, &anti).norm(), 0.0);
        let r = s2_rpmg_gradient(&e3.0, &anti, 0.5, 0.01).unwrap();
        assert!(r.antipodal && r.g == Vec3::zeros());
    }

    #[test]
    fn converged_gradient_vanishes() {
        let gt = s2_map(&Vec3::new(1.0, -2.0, 0.5f64)).unwrap();
        let r = s2_rpmg_gradient(gt.vec(), &gt, 0.5, 0.01).unwrap();
        assert!(r.g.norm() < 1e-15);
    }
}
