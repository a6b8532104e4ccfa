//! Small dense helpers over `faer` matrices.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = Mat<C64>;

pub fn zeros(n: usize) -> CMat {
    Mat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn adjoint(m: MatRef<'_, C64>) -> CMat {
    Mat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn matmul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> CMat {
    a * b
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut d: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

pub fn hermiticity_defect(m: MatRef<'_, C64>) -> f64 {
    let mut d: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

/// `max |U†U − 1|`.
pub fn unitarity_defect(u: MatRef<'_, C64>) -> f64 {
    let g = adjoint(u) * u;
    max_abs_diff(g.as_ref(), identity(u.nrows()).as_ref())
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: MatRef<'_, C64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending, eigenvectors as
/// columns.
pub fn hermitian_eigen(m: MatRef<'_, C64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// `V diag(f(λ)) V†` for Hermitian `m = V diag(λ) V†`.
pub fn hermitian_function(m: MatRef<'_, C64>, f: impl Fn(f64) -> C64) -> Result<CMat> {
    let (values, v) = hermitian_eigen(m)?;
    let n = m.nrows();
    let fv = Mat::from_fn(n, n, |i, j| v[(i, j)] * f(values[j]));
    Ok(fv * adjoint(v.as_ref()))
}

/// `exp(i A)` for Hermitian `A`.
pub fn expm_i_hermitian(a: MatRef<'_, C64>) -> Result<CMat> {
    hermitian_function(a, |x| C64::from_polar(1.0, x))
}

/// Block-diagonal matrix keeping only entries whose row and column fall in the
/// same block of `blocks` (given as `(offset, len)`).
pub fn restrict_to_blocks(m: MatRef<'_, C64>, blocks: &[(usize, usize)]) -> CMat {
    let n = m.nrows();
    let block_of = |i: usize| blocks.iter().position(|&(o, l)| i >= o && i < o + l);
    Mat::from_fn(n, n, |i, j| {
        if block_of(i).is_some() && block_of(i) == block_of(j) {
            m[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Largest entry outside the diagonal blocks.
pub fn off_block_norm(m: MatRef<'_, C64>, blocks: &[(usize, usize)]) -> f64 {
    let n = m.nrows();
    let block_of = |i: usize| blocks.iter().position(|&(o, l)| i >= o && i < o + l);
    let mut d: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if block_of(i) != block_of(j) || block_of(i).is_none() {
                d = d.max(m[(i, j)].norm());
            }
        }
    }
    d
}

/// Sub-matrix `m[offset..offset+len, offset..offset+len]`.
pub fn diagonal_block(m: MatRef<'_, C64>, offset: usize, len: usize) -> CMat {
    Mat::from_fn(len, len, |i, j| m[(offset + i, offset + j)])
}

/// Writes `block` into `m` at `(offset, offset)`.
pub fn set_diagonal_block(m: &mut CMat, offset: usize, block: MatRef<'_, C64>) {
    for j in 0..block.ncols() {
        for i in 0..block.nrows() {
            m[(offset + i, offset + j)] = block[(i, j)];
        }
    }
}
