//! Small dense linear-algebra helpers shared across the crate.
//!
//! These wrap LAPACK routines (via `ndarray-linalg`) with the error
//! conventions used here, plus a deterministic power iteration for
//! largest-eigenvalue estimates.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Cholesky, Eigh, JobSvd, Solve, SVDDC, UPLO};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense column-major-agnostic f64 matrix used throughout the crate.
pub type Mat = Array2<f64>;

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym(a: &Mat) -> Mat {
    (a + &a.t()) * 0.5
}

/// Squared Frobenius norm.
pub fn fro_sq(a: &Mat) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Frobenius norm.
pub fn fro(a: &Mat) -> f64 {
    fro_sq(a).sqrt()
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn eigh(a: &Mat) -> Result<(Array1<f64>, Mat)> {
    let (vals, vecs) = a.eigh(UPLO::Lower)?;
    Ok((vals, vecs))
}

/// Inverse square root `A^{-1/2}` of a symmetric positive-definite matrix.
///
/// Eigenvalues below `1e-14` times the largest are rejected.
pub fn inv_sqrt_spd(a: &Mat) -> Result<Mat> {
    let (vals, vecs) = eigh(a)?;
    let max = vals.iter().cloned().fold(f64::MIN, f64::max);
    if max <= 0.0 {
        return Err(Error::Numerical("matrix is not positive definite".into()));
    }
    let mut scaled = vecs.clone();
    for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let ev = vals[j];
        if ev < 1e-14 * max {
            return Err(Error::Numerical(format!(
                "eigenvalue {ev:.3e} too small for inverse square root"
            )));
        }
        col.mapv_inplace(|x| x / ev.sqrt());
    }
    Ok(scaled.dot(&vecs.t()))
}

/// Thin SVD `A = U diag(s) Vᵀ` with `U: m×k`, `Vᵀ: k×n`, `k = min(m,n)`.
pub fn thin_svd(a: &Mat) -> Result<(Mat, Array1<f64>, Mat)> {
    let (u, s, vt) = a.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let vt = vt.ok_or_else(|| Error::Numerical("SVD did not return Vᵀ".into()))?;
    Ok((u, s, vt))
}

/// Orthonormal polar factor `UVᵀ` of a thin SVD; the closest matrix with
/// orthonormal columns, and the maximizer of `Tr(AᵀW)` over `AᵀA = I`.
pub fn polar_factor(w: &Mat) -> Result<Mat> {
    let (u, _s, vt) = thin_svd(w)?;
    Ok(u.dot(&vt))
}

/// Lower Cholesky factor; fails iff the matrix is not positive definite.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    Ok(a.cholesky(UPLO::Lower)?)
}

/// Solve `A x = b` for square `A` by LU with partial pivoting.
pub fn solve(a: &Mat, b: &Array1<f64>) -> Result<Array1<f64>> {
    Ok(a.solve(b)?)
}

/// Largest eigenvalue of a symmetric PSD operator given as a matvec,
/// by power iteration with a Rayleigh-quotient estimate.
///
/// Runs until the estimate changes by less than `rtol` relatively, or
/// `max_iter` iterations. The start vector is drawn from a fixed seed so
/// results are reproducible.
pub fn power_iteration<F>(dim: usize, matvec: F, max_iter: usize, rtol: f64) -> f64
where
    F: Fn(&Array1<f64>) -> Array1<f64>,
{
    let mut rng = ChaCha12Rng::seed_from_u64(0x9d2c_5680);
    let mut v: Array1<f64> = Array1::from_shape_fn(dim, |_| rng.sample(StandardNormal));
    let mut norm = v.dot(&v).sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
        norm = 1.0;
    }
    v.mapv_inplace(|x| x / norm);
    let mut lambda = 0.0_f64;
    for _ in 0..max_iter {
        let w = matvec(&v);
        let next = v.dot(&w);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        if (next - lambda).abs() <= rtol * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Matrix of i.i.d. standard normal entries, filled row by row.
pub fn randn(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    Mat::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Orthonormalize the columns of a full-column-rank matrix (thin QR).
///
/// Fails when a diagonal entry of `R` falls below `1e-12` times the largest
/// column norm, i.e. when the columns are numerically dependent.
pub fn orthonormalize(a: &Mat) -> Result<Mat> {
    let (m, n) = a.dim();
    if n > m {
        return Err(Error::Dimension(format!(
            "cannot orthonormalize {m}×{n} with more columns than rows"
        )));
    }
    let mut q = a.clone();
    let scale = a
        .columns()
        .into_iter()
        .map(|c| c.dot(&c).sqrt())
        .fold(0.0_f64, f64::max);
    for j in 0..n {
        // two rounds of Gram-Schmidt for orthogonality near machine precision
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).to_owned();
                let proj = qi.dot(&q.column(j));
                let mut cj = q.column_mut(j);
                cj.scaled_add(-proj, &qi);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if norm <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "column {j} is numerically dependent on earlier columns"
            )));
        }
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    Ok(q)
}
