use nalgebra::{DMatrix, DVector};

use super::unscented::unscented_transform;
use super::{kf_predict, GaussianEstimate, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::right_solve_spd;
use crate::models::{symmetrize, ModelSet3d};
use crate::scalar::Scalar;

/// Linear prediction of the 3D planar box state, `x' = F x + m`.
pub fn ukf_predict<T: Scalar>(est: &GaussianEstimate<T>, model: &ModelSet3d<T>) -> Result<GaussianEstimate<T>> {
    kf_predict(est, &model.f, &model.q, Some(&model.m))
}

/// Unscented update through the box measurement of the perspective projection.
pub fn ukf_update<T: Scalar>(
    pred: &GaussianEstimate<T>,
    z: &DVector<T>,
    model: &ModelSet3d<T>,
) -> Result<GaussianEstimate<T>> {
    ukf_update_with(pred, z, &model.r, |x| model.measure(x))
}

/// Unscented update for an arbitrary measurement function with additive noise `r`.
///
/// The posterior covariance is assembled from the square-root factors,
/// `(M_x − K M_y)(M_x − K M_y)ᵀ + K R Kᵀ`, which keeps it positive
/// semidefinite by construction.
pub fn ukf_update_with<T, G>(
    pred: &GaussianEstimate<T>,
    z: &DVector<T>,
    r: &DMatrix<T>,
    g: G,
) -> Result<GaussianEstimate<T>>
where
    T: Scalar,
    G: FnMut(&DVector<T>) -> Result<DVector<T>>,
{
    let sigma = unscented_transform(&pred.mean, &pred.cov, g)?;
    let m = sigma.mean_y.len();
    if z.len() != m {
        return Err(Error::dims("measurement", m, z.len()));
    }
    if r.shape() != (m, m) {
        return Err(Error::dims("measurement noise", format!("{m}x{m}"), format!("{:?}", r.shape())));
    }
    let s = symmetrize(&(sigma.cov_y() + r));
    let k = right_solve_spd(&sigma.cross_cov(), &s)?;
    let residual_root = &sigma.dev_x - &k * &sigma.dev_y;
    let cov = symmetrize(&(&residual_root * residual_root.transpose() + &k * r * k.transpose()));
    Ok(GaussianEstimate {
        mean: &pred.mean + &k * (z - &sigma.mean_y),
        cov,
        frame: pred.frame,
        space: pred.space,
    })
}

/// Bounding-box moments `(m_y, M_y M_yᵀ)` of a 3D planar box estimate.
pub fn project_estimate<T: Scalar>(est: &GaussianEstimate<T>, model: &ModelSet3d<T>) -> Result<GaussianEstimate<T>> {
    let sigma = unscented_transform(&est.mean, &est.cov, |x| model.measure(x))?;
    let cov = symmetrize(&sigma.cov_y());
    Ok(GaussianEstimate {
        mean: sigma.mean_y,
        cov,
        frame: est.frame,
        space: StateSpace::BoundingBox,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraIntrinsics;
    use crate::filters::kf_update;
    use crate::models::{build_model_3d, measurement_noise, Model3dParams, R_NORMALIZED};
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    fn model() -> ModelSet3d<f64> {
        let cam = CameraIntrinsics::new(1e-3, 1e-6, Vector2::new(960.0, 540.0)).unwrap();
        build_model_3d(1.0 / 30.0, cam, measurement_noise(1080.0, &R_NORMALIZED), &Model3dParams::pedestrian()).unwrap()
    }

    fn state(values: [f64; 8], cov_diag: [f64; 8]) -> GaussianEstimate<f64> {
        GaussianEstimate::new(
            DVector::from_row_slice(&values),
            DMatrix::from_diagonal(&DVector::from_row_slice(&cov_diag)),
            0,
            StateSpace::Planar3d,
        )
        .unwrap()
    }

    #[test]
    fn linear_measurement_matches_kalman() {
        let pred = GaussianEstimate::new(
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            DMatrix::from_row_slice(3, 3, &[2.0, 0.4, 0.1, 0.4, 1.5, -0.3, 0.1, -0.3, 0.8]),
            3,
            StateSpace::Generic,
        )
        .unwrap();
        let h = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, -1.0, 2.0]);
        let r = DMatrix::from_row_slice(2, 2, &[0.3, 0.05, 0.05, 0.2]);
        let z = DVector::from_vec(vec![0.7, 1.1]);
        let u = ukf_update_with(&pred, &z, &r, |x| Ok(&h * x)).unwrap();
        let k = kf_update(&pred, &z, &h, &r).unwrap();
        assert_relative_eq!(u.mean, k.mean, max_relative = 1e-10);
        assert_relative_eq!(u.cov, k.cov, max_relative = 1e-10);
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let m = model();
        let pred = state([0.3, 0.1, 1.5, 0.0, 8.0, -0.2, 0.85, 1.65], [0.01, 0.2, 0.01, 0.2, 0.5, 0.3, 0.02, 0.01]);
        let sigma = unscented_transform(&pred.mean, &pred.cov, |x| m.measure(x)).unwrap();
        let post = ukf_update(&pred, &sigma.mean_y, &m).unwrap();
        assert_relative_eq!(post.mean, pred.mean, max_relative = 1e-12);
        assert!(post.cov.trace() < pred.cov.trace());
        assert!(post.is_valid());
    }

    #[test]
    fn sigma_point_behind_camera() {
        let m = model();
        let pred = state([0.0, 0.0, 0.0, 0.0, 0.001, 0.0, 0.85, 1.65], [0.01, 0.1, 0.01, 0.1, 4.0, 0.1, 0.01, 0.01]);
        let z = DVector::from_vec(vec![960.0, 540.0, 100.0, 200.0]);
        assert!(matches!(ukf_update(&pred, &z, &m), Err(Error::FunctionDomainError(_))));
    }

    #[test]
    fn projected_estimate_of_point_mass() {
        let m = model();
        let est = state([0.0, 0.0, 0.0, 0.0, 1.65, 0.0, 0.85, 1.65], [0.0; 8]);
        let bb = project_estimate(&est, &m).unwrap();
        let expected = [960.0, 540.0, 515.1515151515151, 1000.0];
        for (a, b) in bb.mean.iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
        assert!(bb.cov.iter().all(|v: &f64| v.abs() < 1e-20));
        assert_eq!(bb.space, StateSpace::BoundingBox);
    }

    #[test]
    fn predict_pulls_extent_to_mean() {
        let m = model();
        let est = state([0.0, 1.0, 0.0, 0.0, 5.0, 0.0, 0.5, 1.65], [0.1; 8]);
        let p = ukf_predict(&est, &m).unwrap();
        assert!(p.mean[6] > 0.5 && p.mean[6] < 0.85);
        assert_relative_eq!(p.mean[7], 1.65, max_relative = 1e-14);
        assert_relative_eq!(p.mean[0], 1.0 / 30.0, max_relative = 1e-14);
    }
}
