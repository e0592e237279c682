use nalgebra::{DMatrix, DVector};

use super::{kf_predict, GaussianEstimate, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::right_solve_spd;
use crate::models::{
    bot_measurement_noise, bot_process_noise, bot_transition, extent_kron, measurement_matrix, symmetrize,
    BotParams, MEAS_DIM,
};
use crate::scalar::Scalar;

/// Bag-of-tricks initialization from the first detection `[x, y, w, h]`.
pub fn bot_init<T: Scalar>(z0: &DVector<T>, p: &BotParams<T>) -> Result<GaussianEstimate<T>> {
    if z0.len() != MEAS_DIM {
        return Err(Error::dims("initial measurement", MEAS_DIM, z0.len()));
    }
    let (two, ten) = (T::lit(2.0), T::lit(10.0));
    let cov = extent_kron(
        z0[2],
        z0[3],
        two * two * p.zeta_r * p.zeta_r,
        ten * ten * p.zeta_rdot * p.zeta_rdot,
    );
    GaussianEstimate::new(measurement_matrix().transpose() * z0, cov, 0, StateSpace::BoxBot)
}

/// Prediction with process noise scaled by the filtered extent of the previous step.
pub fn bot_predict<T: Scalar>(est: &GaussianEstimate<T>, p: &BotParams<T>) -> Result<GaussianEstimate<T>> {
    let q = bot_process_noise(est.mean[4], est.mean[6], p);
    kf_predict(est, &bot_transition(), &q, None)
}

/// Update with measurement noise scaled by the predicted extent.
///
/// The covariance uses `P − K S Kᵀ` rather than the Joseph form.
pub fn bot_update<T: Scalar>(
    pred: &GaussianEstimate<T>,
    z: &DVector<T>,
    p: &BotParams<T>,
) -> Result<GaussianEstimate<T>> {
    if z.len() != MEAS_DIM {
        return Err(Error::dims("measurement", MEAS_DIM, z.len()));
    }
    let h: DMatrix<T> = measurement_matrix();
    let r = bot_measurement_noise(pred.mean[4], pred.mean[6], p);
    let s = symmetrize(&(&h * &pred.cov * h.transpose() + r));
    let k = right_solve_spd(&(&pred.cov * h.transpose()), &s)?;
    let mean = &pred.mean + &k * (z - &h * &pred.mean);
    let cov = symmetrize(&(&pred.cov - &k * s * k.transpose()));
    Ok(GaussianEstimate {
        mean,
        cov,
        frame: pred.frame,
        space: pred.space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z(values: [f64; 4]) -> DVector<f64> {
        DVector::from_row_slice(&values)
    }

    #[test]
    fn init_covariance_expands_kronecker() {
        let e = bot_init(&z([960.0, 540.0, 100.0, 200.0]), &BotParams::default()).unwrap();
        // 2²ζ_r² = 0.01 and 10²ζ_ṙ² = 0.00390625 on (w², h²) = (1e4, 4e4).
        let expected = [100.0, 39.0625, 400.0, 156.25, 100.0, 39.0625, 400.0, 156.25];
        for (a, b) in e.cov.diagonal().iter().zip(expected) {
            assert_relative_eq!(*a, b, max_relative = 1e-14);
        }
        assert_eq!(e.mean, DVector::from_vec(vec![960.0, 0.0, 540.0, 0.0, 100.0, 0.0, 200.0, 0.0]));
        let e = bot_init(&z([5.0, 5.0, 0.0, 0.0]), &BotParams::default()).unwrap();
        assert_eq!(e.cov, DMatrix::zeros(8, 8));
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let p = BotParams::default();
        let e = bot_init(&z([960.0, 540.0, 100.0, 200.0]), &p).unwrap();
        let pred = bot_predict(&e, &p).unwrap();
        let post = bot_update(&pred, &(measurement_matrix() * &pred.mean), &p).unwrap();
        assert_relative_eq!(post.mean, pred.mean, max_relative = 1e-14);
        assert!(post.is_valid());
    }

    #[test]
    fn predict_uses_filtered_extent_and_unit_step() {
        let p = BotParams::default();
        let mut e = bot_init(&z([10.0, 20.0, 100.0, 200.0]), &p).unwrap();
        e.mean[1] = 1.0;
        let pred = bot_predict(&e, &p).unwrap();
        assert_eq!(pred.mean[0], 11.0);
        let f = bot_transition::<f64>();
        let expected = &f * &e.cov * f.transpose() + bot_process_noise(100.0, 200.0, &p);
        assert_relative_eq!(pred.cov, expected, max_relative = 1e-14);
    }

    #[test]
    fn update_uses_predicted_extent() {
        let p = BotParams::default();
        let e = bot_init(&z([10.0, 20.0, 100.0, 200.0]), &p).unwrap();
        let mut pred = bot_predict(&e, &p).unwrap();
        pred.mean[4] = 50.0;
        pred.mean[6] = 80.0;
        let meas = z([12.0, 21.0, 52.0, 83.0]);
        let post = bot_update(&pred, &meas, &p).unwrap();
        // Oracle: plain Kalman algebra with R from the predicted extent.
        let h = measurement_matrix::<f64>();
        let r = bot_measurement_noise(50.0, 80.0, &p);
        let s = &h * &pred.cov * h.transpose() + &r;
        let k = &pred.cov * h.transpose() * s.clone().try_inverse().unwrap();
        assert_relative_eq!(post.mean, &pred.mean + &k * (&meas - &h * &pred.mean), max_relative = 1e-12);
        assert_relative_eq!(post.cov, &pred.cov - &k * s * k.transpose(), max_relative = 1e-10, epsilon = 1e-12);
    }
}
