//! Dense complex helpers shared by the state and operator types.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::space::HilbertSpace;
use crate::error::Result;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn unitarity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    // symmetrize so rounding noise cannot leak into the solver
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `f(H) = V f(Λ) V†` for Hermitian `H`.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let diag = CVector::from_iterator(values.len(), values.iter().map(|&x| f(x)));
    &vectors * CMatrix::from_diagonal(&diag) * vectors.adjoint()
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Lifts an operator on `sub` (a subset of the factors of `full`, any
/// order) to `full`, acting as the identity on the remaining factors.
pub fn embed(op: &CMatrix, sub: &HilbertSpace, full: &HilbertSpace) -> Result<CMatrix> {
    let (sub_idx, rest_idx) = full.split_indices(sub)?;
    let n = full.total_dim();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rest_idx[i] == rest_idx[j] {
                out[(i, j)] = op[(sub_idx[i], sub_idx[j])];
            }
        }
    }
    Ok(out)
}

/// Traces out every factor of `space` that is not in `keep`; the result is
/// ordered as in `keep`.
pub fn partial_trace(m: &CMatrix, space: &HilbertSpace, keep: &HilbertSpace) -> Result<CMatrix> {
    let (keep_idx, rest_idx) = space.split_indices(keep)?;
    let dk = keep.total_dim();
    let n = space.total_dim();
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..n {
        for j in 0..n {
            if rest_idx[i] == rest_idx[j] {
                out[(keep_idx[i], keep_idx[j])] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reorders the factors of a vector from `from` to `to` (same factors).
pub fn permute_vector(v: &CVector, from: &HilbertSpace, to: &HilbertSpace) -> Result<CVector> {
    let (to_idx, _) = from.split_indices(to)?;
    let mut out = CVector::zeros(v.len());
    for (i, &k) in to_idx.iter().enumerate() {
        out[k] = v[i];
    }
    Ok(out)
}

/// Reorders the factors of a square matrix from `from` to `to`.
pub fn permute_matrix(m: &CMatrix, from: &HilbertSpace, to: &HilbertSpace) -> Result<CMatrix> {
    let (to_idx, _) = from.split_indices(to)?;
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(to_idx[i], to_idx[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}
