use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sqrt_psd;
use crate::scalar::Scalar;

/// Symmetric sigma-point set and its image under a vector function.
///
/// With `n` the input dimension there are exactly `2n` equally weighted
/// points `mean ± √n · Lᵢ`, where `L Lᵀ = cov`. The deviation matrices are
/// scaled by `1/√(2n)` so that `P_y = M_y M_yᵀ` and `P_xy = M_x M_yᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSet<T: Scalar> {
    pub mean_x: DVector<T>,
    /// Sigma points as columns, `n × 2n`.
    pub points: DMatrix<T>,
    /// Transformed sigma points as columns, `m × 2n`.
    pub transformed: DMatrix<T>,
    pub mean_y: DVector<T>,
    /// Scaled input deviations `M_x`, `n × 2n`.
    pub dev_x: DMatrix<T>,
    /// Scaled output deviations `M_y`, `m × 2n`.
    pub dev_y: DMatrix<T>,
}

impl<T: Scalar> SigmaSet<T> {
    pub fn cov_y(&self) -> DMatrix<T> {
        &self.dev_y * self.dev_y.transpose()
    }

    pub fn cross_cov(&self) -> DMatrix<T> {
        &self.dev_x * self.dev_y.transpose()
    }
}

/// Unscented transform of `N(mean, cov)` through `g`.
///
/// Any error returned by `g` at a sigma point is reported as
/// [`Error::FunctionDomainError`].
pub fn unscented_transform<T, G>(mean: &DVector<T>, cov: &DMatrix<T>, mut g: G) -> Result<SigmaSet<T>>
where
    T: Scalar,
    G: FnMut(&DVector<T>) -> Result<DVector<T>>,
{
    let n = mean.len();
    if n == 0 {
        return Err(Error::dims("unscented transform input", "n >= 1", 0));
    }
    if cov.shape() != (n, n) {
        return Err(Error::dims("unscented transform covariance", format!("{n}x{n}"), format!("{:?}", cov.shape())));
    }
    let root = sqrt_psd(cov)?;
    let spread = root * T::lit(n as f64).sqrt();
    let count = 2 * n;

    let mut points = DMatrix::zeros(n, count);
    for i in 0..n {
        let col = spread.column(i);
        points.set_column(i, &(mean + col));
        points.set_column(n + i, &(mean - col));
    }

    let mut outputs = Vec::with_capacity(count);
    for i in 0..count {
        let x = points.column(i).into_owned();
        let y = g(&x).map_err(|e| Error::FunctionDomainError(format!("sigma point {i}: {e}")))?;
        if let Some(first) = outputs.first() {
            let first: &DVector<T> = first;
            if first.len() != y.len() {
                return Err(Error::dims("transformed sigma point", first.len(), y.len()));
            }
        }
        outputs.push(y);
    }
    let transformed = DMatrix::from_columns(&outputs);

    let weight = T::one() / T::lit(count as f64);
    let mean_y = transformed.column_sum() * weight;
    let scale = weight.sqrt();
    let mut dev_x = points.clone();
    let mut dev_y = transformed.clone();
    for i in 0..count {
        let cx = (dev_x.column(i) - mean) * scale;
        dev_x.set_column(i, &cx);
        let cy = (dev_y.column(i) - &mean_y) * scale;
        dev_y.set_column(i, &cy);
    }

    Ok(SigmaSet {
        mean_x: mean.clone(),
        points,
        transformed,
        mean_y,
        dev_x,
        dev_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_exact() {
        let mean = DVector::from_vec(vec![1.0, 2.0]);
        let cov = DMatrix::identity(2, 2);
        let s = unscented_transform(&mean, &cov, |x| Ok(x.clone())).unwrap();
        assert_eq!(s.points.ncols(), 4);
        assert_relative_eq!(s.mean_y, mean, max_relative = 1e-15);
        assert_relative_eq!(s.cov_y(), cov, max_relative = 1e-15);
    }

    #[test]
    fn square_of_standard_normal() {
        // Sigma points {+1, -1}: both map to 1, so the output spread collapses.
        let s = unscented_transform(
            &DVector::from_element(1, 0.0),
            &DMatrix::from_element(1, 1, 1.0),
            |x| Ok(x.map(|v| v * v)),
        )
        .unwrap();
        assert_eq!(s.points.as_slice(), &[1.0, -1.0]);
        assert_eq!(s.mean_y[0], 1.0);
        assert_eq!(s.cov_y()[(0, 0)], 0.0);
    }

    #[test]
    fn sigma_points_reconstruct_moments() {
        let mean = DVector::from_vec(vec![0.5, -3.0, 7.0]);
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 0.5]);
        let s = unscented_transform(&mean, &cov, |x| Ok(x.clone())).unwrap();
        assert_relative_eq!(s.points.column_mean(), mean, max_relative = 1e-12);
        assert_relative_eq!(&s.dev_x * s.dev_x.transpose(), cov, max_relative = 1e-12);
        assert_relative_eq!(s.cross_cov(), cov, max_relative = 1e-12);
    }

    #[test]
    fn domain_errors_are_reported() {
        let r = unscented_transform(
            &DVector::from_element(1, 0.0),
            &DMatrix::from_element(1, 1, 1.0),
            |x| {
                if x[0] < 0.0 {
                    Err(Error::DepthNonPositive { depth: x[0] })
                } else {
                    Ok(x.clone())
                }
            },
        );
        assert!(matches!(r, Err(Error::FunctionDomainError(_))));
    }

    #[test]
    fn indefinite_covariance_fails() {
        let r = unscented_transform(
            &DVector::zeros(2),
            &DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]),
            |x| Ok(x.clone()),
        );
        assert!(matches!(r, Err(Error::DecompositionFailure(_))));
    }
}
