//! Fixed-size dense linear algebra: vectors and matrices up to 4×4, 3×3 SVD,
//! symmetric eigendecomposition, and small dense solves.

mod decomp;
mod dense;
mod matrix;
mod vector;

pub use decomp::{eig_sym, eig_sym4, svd3, EigResult, SvdResult, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use dense::{solve_dense, SmallMatrix, MAX_DIM};
pub use matrix::{Mat3, Mat4, Matrix};
pub use vector::{Vec3, Vec4, Vector};
