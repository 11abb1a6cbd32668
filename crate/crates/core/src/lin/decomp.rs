//! Jacobi-based decompositions for tiny dense matrices.
//!
//! Both routines run cyclic sweeps of plane rotations until the off-diagonal
//! mass falls below `1e-13` relative to the matrix norm, giving up after 60
//! sweeps. Cyclic Jacobi converges quadratically for symmetric input, so in
//! practice 3×3 and 4×4 problems finish in five or six sweeps.

use super::matrix::{Mat3, Matrix};
use super::vector::{Vec3, Vector};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_SWEEPS: usize = 60;
pub const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// `M = U·diag(sigma)·Vᵀ` with `sigma` descending and non-negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdResult<T> {
    pub u: Mat3<T>,
    pub sigma: Vec3<T>,
    pub v: Mat3<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn reconstruct(&self) -> Mat3<T> {
        self.u * Mat3::from_diagonal(&self.sigma) * self.v.transpose()
    }
}

/// Eigenpairs of a symmetric matrix; `values` ascending, `vectors` holds the
/// matching unit eigenvectors as columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigResult<T, const N: usize> {
    pub values: Vector<T, N>,
    pub vectors: Matrix<T, N, N>,
}

impl<T: Real, const N: usize> EigResult<T, N> {
    pub fn vector(&self, k: usize) -> Vector<T, N> {
        self.vectors.col(k)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Input that is not symmetric to within `1e-9` is replaced by its
/// symmetric part.
pub fn eig_sym<T: Real, const N: usize>(a: &Matrix<T, N, N>) -> Result<EigResult<T, N>> {
    if !a.is_finite() {
        return Err(Error::NonFinite("eig_sym"));
    }
    let mut m = if a.asymmetry() > T::tol(1e-9) {
        a.symmetric_part()
    } else {
        *a
    };
    let mut v = Matrix::<T, N, N>::identity();
    let scale = m.norm();
    let tol = T::tol(OFF_DIAGONAL_TOL) * scale;

    let off_norm = |m: &Matrix<T, N, N>| {
        let mut s = T::zero();
        for i in 0..N {
            for j in i + 1..N {
                s += m.0[i][j] * m.0[i][j];
            }
        }
        s.sqrt()
    };

    let mut converged = scale == T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged || off_norm(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = m.0[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m.0[q][q] - m.0[p][p]) / (T::c(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // m ← Jᵀ m J
                for k in 0..N {
                    let mkp = m.0[k][p];
                    let mkq = m.0[k][q];
                    m.0[k][p] = c * mkp - s * mkq;
                    m.0[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m.0[p][k];
                    let mqk = m.0[q][k];
                    m.0[p][k] = c * mpk - s * mqk;
                    m.0[q][k] = s * mpk + c * mqk;
                }
                m.0[p][q] = T::zero();
                m.0[q][p] = T::zero();
                for k in 0..N {
                    let vkp = v.0[k][p];
                    let vkq = v.0[k][q];
                    v.0[k][p] = c * vkp - s * vkq;
                    v.0[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_norm(&m) > tol {
        return Err(Error::NoConvergence {
            routine: "eig_sym",
            sweeps: MAX_SWEEPS,
        });
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| m.0[i][i].partial_cmp(&m.0[j][j]).expect("finite eigenvalues"));
    Ok(EigResult {
        values: Vector::from_fn(|k| m.0[order[k]][order[k]]),
        vectors: Matrix::from_fn(|i, k| v.0[i][order[k]]),
    })
}

/// 4×4 symmetric eigendecomposition.
pub fn eig_sym4<T: Real>(a: &Matrix<T, 4, 4>) -> Result<EigResult<T, 4>> {
    eig_sym(a)
}

/// 3×3 singular value decomposition by one-sided (Hestenes) Jacobi.
///
/// Column pairs of `W = M·V` are rotated until mutually orthogonal, which is
/// Jacobi on `MᵀM` without forming it. Singular values are the column norms.
/// U columns are then re-orthonormalized in descending σ order, with columns
/// whose σ is negligible replaced by the orthogonal complement.
pub fn svd3<T: Real>(m: &Mat3<T>) -> Result<SvdResult<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite("svd3"));
    }
    let mut w = *m;
    let mut v = Mat3::<T>::identity();
    let tol = T::tol(OFF_DIAGONAL_TOL);
    // Columns below this squared norm are rounding noise; rotating them
    // against a large column never reaches the relative tolerance.
    let floor = (T::epsilon() * m.norm()).powi(2);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let wp = w.col(p);
            let wq = w.col(q);
            let alpha = wp.norm_squared();
            let beta = wq.norm_squared();
            let gamma = wp.dot(&wq);
            if gamma == T::zero()
                || alpha.min(beta) <= floor
                || gamma.abs() <= tol * (alpha * beta).sqrt()
            {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (T::c(2.0) * gamma);
            let t = zeta.signum() / (zeta.abs() + (zeta * zeta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = c * t;
            w.set_col(p, wp * c - wq * s);
            w.set_col(q, wp * s + wq * c);
            let vp = v.col(p);
            let vq = v.col(q);
            v.set_col(p, vp * c - vq * s);
            v.set_col(q, vp * s + vq * c);
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "svd3",
            sweeps: MAX_SWEEPS,
        });
    }

    let norms: [T; 3] = std::array::from_fn(|j| w.col(j).norm());
    let mut order = [0usize, 1, 2];
    // Stable sort keeps ties in their original column order.
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));
    let sigma = Vec3::from_fn(|k| norms[order[k]]);
    let v = Mat3::from_cols([v.col(order[0]), v.col(order[1]), v.col(order[2])]);
    let wcols = [w.col(order[0]), w.col(order[1]), w.col(order[2])];

    let negligible = sigma[0] * T::epsilon() * T::c(16.0);
    let mut u_cols: [Vec3<T>; 3] = [Vec3::zeros(); 3];
    for k in 0..3 {
        let mut cand = wcols[k];
        let usable = sigma[k] > negligible && sigma[k] > T::min_positive_value();
        if usable {
            // Two Gram-Schmidt passes against the columns already fixed.
            for _ in 0..2 {
                for prev in &u_cols[..k] {
                    cand -= *prev * prev.dot(&cand);
                }
            }
        }
        u_cols[k] = match cand.try_normalize(T::zero()).filter(|_| usable) {
            Some(u) => u,
            None => complement(&u_cols[..k], &wcols[k]),
        };
    }
    Ok(SvdResult {
        u: Mat3::from_cols(u_cols),
        sigma,
        v,
    })
}

/// A unit vector orthogonal to `basis` (0, 1 or 2 orthonormal vectors),
/// oriented along `hint` when that is meaningful.
fn complement<T: Real>(basis: &[Vec3<T>], hint: &Vec3<T>) -> Vec3<T> {
    let cand = match basis {
        [a, b] => a.cross(b),
        [a] => {
            // Axis least aligned with `a`.
            let k = (0..3)
                .min_by(|&i, &j| a[i].abs().partial_cmp(&a[j].abs()).expect("finite"))
                .unwrap_or(0);
            let e = Vec3::axis(k);
            (e - *a * a.dot(&e))
                .try_normalize(T::zero())
                .unwrap_or(Vec3::axis((k + 1) % 3))
        }
        _ => Vec3::axis(0),
    };
    if cand.dot(hint) < T::zero() {
        -cand
    } else {
        cand
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_identity() {
        let r = svd3(&Mat3::<f64>::identity()).unwrap();
        assert_eq!(r.sigma, Vec3::new(1.0, 1.0, 1.0));
        assert!((r.u * r.v.transpose() - Mat3::identity()).norm() < 1e-15);
    }

    #[test]
    fn svd_diagonal_orders_values() {
        let m = Mat3::from_diagonal(&Vec3::new(3.0, 2.0, 1.0));
        let r = svd3(&m).unwrap();
        assert_eq!(r.sigma, Vec3::new(3.0, 2.0, 1.0));
        let m = Mat3::from_diagonal(&Vec3::new(1.0, -3.0, 2.0));
        let r = svd3(&m).unwrap();
        assert_eq!(r.sigma, Vec3::new(3.0, 2.0, 1.0));
        assert!((r.reconstruct() - m).norm() < 1e-14);
    }

    #[test]
    fn svd_rank_deficient() {
        let a = Vec3::new(1.0f64, 2.0, -1.0);
        let b = Vec3::new(0.5, 0.0, 3.0);
        let m = Mat3::outer(&a, &b);
        let r = svd3(&m).unwrap();
        assert!(r.sigma[1] < 1e-14 && r.sigma[2] < 1e-14);
        assert!((r.u.transpose() * r.u - Mat3::identity()).norm() < 1e-12);
        assert!((r.reconstruct() - m).norm() < 1e-12);
        let r = svd3(&Mat3::<f64>::zeros()).unwrap();
        assert_eq!(r.sigma, Vec3::zeros());
        assert!((r.u.transpose() * r.u - Mat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let r = eig_sym4(&Matrix::<f64, 4, 4>::identity()).unwrap();
        assert_eq!(r.values, Vector([1.0; 4]));
        let d = Matrix::from_diagonal(&Vector([1.0f64, -2.0, 5.0, 0.0]));
        let r = eig_sym4(&d).unwrap();
        assert_eq!(r.values, Vector([-2.0, 0.0, 1.0, 5.0]));
        for (k, axis) in [1, 3, 0, 2].into_iter().enumerate() {
            assert_eq!(r.vector(k)[axis].abs(), 1.0);
        }
    }

    #[test]
    fn eig_symmetrizes_input() {
        let a = Matrix([[2.0f64, 1.0], [0.0, 2.0]]);
        let r = eig_sym(&a).unwrap();
        assert!((r.values[0] - 1.5).abs() < 1e-14);
        assert!((r.values[1] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_nan() {
        let mut m = Mat3::<f64>::identity();
        m[(0, 1)] = f64::NAN;
        assert!(svd3(&m).is_err());
        assert!(eig_sym(&m).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let m = Mat3::<f32>::from_fn(|i, j| ((i * 3 + j) as f32).sin());
        let r = svd3(&m).unwrap();
        assert!((r.reconstruct() - m).norm() < 1e-5);
    }
}
