use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use super::vector::Vector;
use crate::scalar::Real;

/// Fixed-size dense matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<T, const R: usize, const C: usize>(pub [[T; C]; R]);

pub type Mat3<T> = Matrix<T, 3, 3>;
pub type Mat4<T> = Matrix<T, 4, 4>;

impl<T: Real, const R: usize, const C: usize> Default for Matrix<T, R, C> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Real, const R: usize, const C: usize> Matrix<T, R, C> {
    pub fn zeros() -> Self {
        Self([[T::zero(); C]; R])
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        Self(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    pub fn from_cols(cols: [Vector<T, R>; C]) -> Self {
        Self::from_fn(|i, j| cols[j][i])
    }

    pub fn from_rows(rows: [Vector<T, C>; R]) -> Self {
        Self::from_fn(|i, j| rows[i][j])
    }

    /// Reads `R·C` entries in row-major order.
    pub fn from_row_slice(s: &[T]) -> Option<Self> {
        (s.len() == R * C).then(|| Self::from_fn(|i, j| s[i * C + j]))
    }

    pub fn to_row_vec(&self) -> Vec<T> {
        self.0.iter().flat_map(|r| r.iter().copied()).collect()
    }

    pub fn col(&self, j: usize) -> Vector<T, R> {
        Vector::from_fn(|i| self.0[i][j])
    }

    pub fn row(&self, i: usize) -> Vector<T, C> {
        Vector(self.0[i])
    }

    pub fn set_col(&mut self, j: usize, v: Vector<T, R>) {
        for i in 0..R {
            self.0[i][j] = v[i];
        }
    }

    pub fn transpose(&self) -> Matrix<T, C, R> {
        Matrix::from_fn(|i, j| self.0[j][i])
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.map(|r| r.map(&f)))
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Frobenius inner product `Σ aᵢⱼ bᵢⱼ`.
    pub fn frobenius_dot(&self, o: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..R {
            for j in 0..C {
                acc += self.0[i][j] * o.0[i][j];
            }
        }
        acc
    }

    pub fn norm(&self) -> T {
        self.frobenius_dot(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flat_map(|r| r.iter()).all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &Vector<T, C>) -> Vector<T, R> {
        Vector::from_fn(|i| Vector(self.0[i]).dot(v))
    }

    /// `a·bᵀ`.
    pub fn outer(a: &Vector<T, R>, b: &Vector<T, C>) -> Self {
        Self::from_fn(|i, j| a[i] * b[j])
    }
}

impl<T: Real, const N: usize> Matrix<T, N, N> {
    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_diagonal(d: &Vector<T, N>) -> Self {
        Self::from_fn(|i, j| if i == j { d[i] } else { T::zero() })
    }

    pub fn diagonal(&self) -> Vector<T, N> {
        Vector::from_fn(|i| self.0[i][i])
    }

    pub fn trace(&self) -> T {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetric_part(&self) -> Self {
        let half = T::c(0.5);
        Self::from_fn(|i, j| (self.0[i][j] + self.0[j][i]) * half)
    }

    /// `‖A − Aᵀ‖_F`.
    pub fn asymmetry(&self) -> T {
        (*self - self.transpose()).norm()
    }
}

impl<T: Real> Mat3<T> {
    pub fn determinant(&self) -> T {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

impl<T, const R: usize, const C: usize> Index<(usize, usize)> for Matrix<T, R, C> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.0[i][j]
    }
}

impl<T, const R: usize, const C: usize> IndexMut<(usize, usize)> for Matrix<T, R, C> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.0[i][j]
    }
}

impl<T: Real, const R: usize, const C: usize> Add for Matrix<T, R, C> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + o.0[i][j])
    }
}

impl<T: Real, const R: usize, const C: usize> AddAssign for Matrix<T, R, C> {
    fn add_assign(&mut self, o: Self) {
        for i in 0..R {
            for j in 0..C {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl<T: Real, const R: usize, const C: usize> Sub for Matrix<T, R, C> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - o.0[i][j])
    }
}

impl<T: Real, const R: usize, const C: usize> Neg for Matrix<T, R, C> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|v| -v)
    }
}

impl<T: Real, const R: usize, const C: usize> Mul<T> for Matrix<T, R, C> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real, const R: usize, const K: usize, const C: usize> Mul<Matrix<T, K, C>>
    for Matrix<T, R, K>
{
    type Output = Matrix<T, R, C>;
    fn mul(self, o: Matrix<T, K, C>) -> Matrix<T, R, C> {
        Matrix::from_fn(|i, j| {
            let mut acc = T::zero();
            for k in 0..K {
                acc += self.0[i][k] * o.0[k][j];
            }
            acc
        })
    }
}

impl<T: Real, const R: usize, const C: usize> Mul<Vector<T, C>> for Matrix<T, R, C> {
    type Output = Vector<T, R>;
    fn mul(self, v: Vector<T, C>) -> Vector<T, R> {
        self.mul_vec(&v)
    }
}
