//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular square root `L` with `L·Lᵀ = cov`.
///
/// Positive semidefinite inputs are accepted: zero pivots produce zero
/// columns. If the factorization fails, `1e-12·trace/n` is added to the
/// diagonal and the factorization retried once.
pub fn sqrt_psd<T: Scalar>(cov: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !cov.is_square() {
        return Err(Error::dims("covariance", "square matrix", format!("{:?}", cov.shape())));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::DecompositionFailure("covariance has non-finite entries".into()));
    }
    if let Some(l) = cholesky_semidefinite(cov) {
        return Ok(l);
    }
    let n = cov.nrows();
    let jitter = T::lit(1e-12) * cov.trace() / T::lit(n as f64);
    if jitter > T::zero() {
        let mut bumped = cov.clone();
        for i in 0..n {
            bumped[(i, i)] += jitter;
        }
        if let Some(l) = cholesky_semidefinite(&bumped) {
            return Ok(l);
        }
    }
    Err(Error::DecompositionFailure(
        "covariance is not positive semidefinite".into(),
    ))
}

fn cholesky_semidefinite<T: Scalar>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    let n = a.nrows();
    let scale = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
    let mut l = DMatrix::zeros(n, n);
    if scale == T::zero() {
        return a.iter().all(|v| *v == T::zero()).then_some(l);
    }
    let tol = T::lit(4.0 * n as f64) * T::default_epsilon() * scale;
    let offdiag_tol = (tol * scale).sqrt();
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > tol {
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut r = a[(i, j)];
                for k in 0..j {
                    r -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = r / ljj;
            }
        } else if d >= -tol {
            // Zero pivot: the remaining column must vanish as well.
            for i in (j + 1)..n {
                let mut r = a[(i, j)];
                for k in 0..j {
                    r -= l[(i, k)] * l[(j, k)];
                }
                if r.abs() > offdiag_tol {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    Some(l)
}

/// Solves `X · S = B` for symmetric positive definite `S`, i.e. `X = B·S⁻¹`.
///
/// Returns [`Error::SingularInnovation`] when `S` is not numerically positive definite.
pub(crate) fn right_solve_spd<T: Scalar>(b: &DMatrix<T>, s: &DMatrix<T>) -> Result<DMatrix<T>> {
    let chol = s.clone().cholesky().ok_or(Error::SingularInnovation)?;
    let l = chol.l_dirty();
    let n = s.nrows();
    let (mut lo, mut hi) = (T::max_value().unwrap(), T::zero());
    for i in 0..n {
        lo = lo.min(l[(i, i)]);
        hi = hi.max(l[(i, i)]);
    }
    if !(lo > T::zero()) || (lo / hi) * (lo / hi) < T::default_epsilon() * T::lit(n as f64) {
        return Err(Error::SingularInnovation);
    }
    Ok(chol.solve(&b.transpose()).transpose())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    let sym = crate::models::symmetrize(m);
    sym.symmetric_eigenvalues()
        .iter()
        .fold(T::max_value().unwrap(), |a, b| a.min(*b))
}

/// True when `m` is symmetric to `1e-9` relative and its eigenvalues are
/// no lower than `-1e-9 · trace`.
pub fn is_symmetric_psd<T: Scalar>(m: &DMatrix<T>) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if scale == T::zero() {
        return true;
    }
    let asym = (m - m.transpose()).iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if asym > T::lit(1e-9) * scale {
        return false;
    }
    min_eigenvalue(m) >= -T::lit(1e-9) * m.trace().abs().max(scale)
}
