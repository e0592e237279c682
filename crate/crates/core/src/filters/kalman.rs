use nalgebra::{DMatrix, DVector};

use super::GaussianEstimate;
#[cfg(test)]
use super::StateSpace;
use crate::error::{Error, Result};
use crate::linalg::right_solve_spd;
use crate::models::symmetrize;
use crate::scalar::Scalar;

/// Linear prediction `x' = F x + m`, `P' = F P Fᵀ + Q`, advancing the frame by one.
pub fn kf_predict<T: Scalar>(
    est: &GaussianEstimate<T>,
    f: &DMatrix<T>,
    q: &DMatrix<T>,
    m: Option<&DVector<T>>,
) -> Result<GaussianEstimate<T>> {
    let n = est.dim();
    if f.shape() != (n, n) {
        return Err(Error::dims("transition matrix", format!("{n}x{n}"), format!("{:?}", f.shape())));
    }
    if q.shape() != (n, n) {
        return Err(Error::dims("process noise", format!("{n}x{n}"), format!("{:?}", q.shape())));
    }
    let mut mean = f * &est.mean;
    if let Some(m) = m {
        if m.len() != n {
            return Err(Error::dims("additive term", n, m.len()));
        }
        mean += m;
    }
    let cov = symmetrize(&(f * &est.cov * f.transpose() + q));
    Ok(GaussianEstimate {
        mean,
        cov,
        frame: est.frame + 1,
        space: est.space,
    })
}

/// Gain `P Hᵀ (H P Hᵀ + R)⁻¹`.
pub fn kalman_gain<T: Scalar>(p: &DMatrix<T>, h: &DMatrix<T>, r: &DMatrix<T>) -> Result<DMatrix<T>> {
    let s = symmetrize(&(h * p * h.transpose() + r));
    right_solve_spd(&(p * h.transpose()), &s)
}

/// Joseph-form posterior covariance `(I − K H) P (I − K H)ᵀ + K R Kᵀ`.
pub fn joseph_covariance<T: Scalar>(
    p: &DMatrix<T>,
    k: &DMatrix<T>,
    h: &DMatrix<T>,
    r: &DMatrix<T>,
) -> DMatrix<T> {
    let n = p.nrows();
    let a = DMatrix::identity(n, n) - k * h;
    symmetrize(&(&a * p * a.transpose() + k * r * k.transpose()))
}

/// Kalman filtering step with the Joseph-form covariance update.
pub fn kf_update<T: Scalar>(
    pred: &GaussianEstimate<T>,
    z: &DVector<T>,
    h: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<GaussianEstimate<T>> {
    check_measurement_dims(pred.dim(), z, h, r)?;
    let k = kalman_gain(&pred.cov, h, r)?;
    let innovation = z - h * &pred.mean;
    Ok(GaussianEstimate {
        mean: &pred.mean + &k * innovation,
        cov: joseph_covariance(&pred.cov, &k, h, r),
        frame: pred.frame,
        space: pred.space,
    })
}

pub(crate) fn check_measurement_dims<T: Scalar>(
    n: usize,
    z: &DVector<T>,
    h: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<()> {
    let m = z.len();
    if h.shape() != (m, n) {
        return Err(Error::dims("measurement matrix", format!("{m}x{n}"), format!("{:?}", h.shape())));
    }
    if r.shape() != (m, m) {
        return Err(Error::dims("measurement noise", format!("{m}x{m}"), format!("{:?}", r.shape())));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) fn scalar_estimate<T: Scalar>(x: T, p: T) -> GaussianEstimate<T> {
    GaussianEstimate {
        mean: DVector::from_element(1, x),
        cov: DMatrix::from_element(1, 1, p),
        frame: 0,
        space: StateSpace::Generic,
    }
}
