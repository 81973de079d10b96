//! Small dense helpers on top of `faer`.
//!
//! Operators are `Mat<c64>`. Vectorization is row-major throughout the crate:
//! the operator entry `(a, b)` of a `d x d` matrix lives at `a * d + b`.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

pub const ZERO: c64 = c64::new(0.0, 0.0);
pub const ONE: c64 = c64::new(1.0, 0.0);

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of a list of factors, leftmost factor most significant.
pub fn kron_all(factors: &[MatRef<'_, c64>]) -> Mat<c64> {
    let mut acc = Mat::<c64>::identity(1, 1);
    for f in factors {
        acc = kron(acc.as_ref(), *f);
    }
    acc
}

pub fn dagger(a: MatRef<'_, c64>) -> Mat<c64> {
    a.adjoint().to_owned()
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    a * b - b * a
}

/// `A + A^dagger` halved.
pub fn hermitize(a: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        (a[(i, j)] + a[(j, i)].conj()) * 0.5
    })
}

/// Frobenius norm of the anti-Hermitian part, `||A - A^dagger||`.
pub fn hermiticity_defect(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    s.sqrt()
}

/// Row-major vectorization.
pub fn vectorize(a: MatRef<'_, c64>) -> Vec<c64> {
    let d = a.nrows();
    let mut v = Vec::with_capacity(d * a.ncols());
    for i in 0..d {
        for j in 0..a.ncols() {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[c64], d: usize) -> Mat<c64> {
    assert_eq!(v.len(), d * d, "vector length is not d^2");
    Mat::from_fn(d, d, |i, j| v[i * d + j])
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let h = hermitize(a);
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Diagonalization(format!("{e:?}")))
}

/// Eigenpairs of a Hermitian matrix; eigenvalues ascending, eigenvectors as columns.
pub fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let h = hermitize(a);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Diagonalization(format!("{e:?}")))?;
    let vals = (0..h.nrows()).map(|i| evd.S()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
