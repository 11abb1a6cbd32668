use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest dimension [`SmallMatrix`] accepts. The 10D projection's KKT system
/// is 14×14.
pub const MAX_DIM: usize = 14;

/// Small dense matrix with runtime dimensions, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> SmallMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} outside 1..={MAX_DIM}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut m = Self::zeros(rows, cols)?;
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times {}-vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for SmallMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SmallMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A·x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot smaller than `1e-12·max(1, max|A|)` is reported as singular.
pub fn solve_dense<T: Real>(a: &SmallMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "solve with {}x{} matrix and {}-vector",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    if a.data.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solve_dense"));
    }
    let pivot_tol = T::tol(1e-12) * a.max_abs().max(T::one());

    let mut m = a.data.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, m[i * n + k].abs()))
            .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot <= pivot_tol {
            return Err(Error::Singular {
                column: k,
                pivot: pivot.to_f64_lossy(),
            });
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let inv = T::one() / m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] * inv;
            if f == T::zero() {
                continue;
            }
            m[i * n + k] = T::zero();
            for j in k + 1..n {
                let v = m[k * n + j];
                m[i * n + j] -= f * v;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Ok(x)
}
