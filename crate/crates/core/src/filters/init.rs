use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::unscented::unscented_transform;
use super::{GaussianEstimate, StateSpace};
use crate::error::{Error, Result};
use crate::models::{measurement_matrix, symmetrize, ModelSet3d, MEAS_DIM, STATE_DIM};
use crate::scalar::Scalar;

/// Prior knowledge used to initialize the 2D box filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConstants2d<T: Scalar> {
    /// Mean pedestrian height in meters.
    pub mean_height_m: T,
    /// Maximum pedestrian speed, taken as three standard deviations.
    pub max_speed_mps: T,
    /// Maximum rate of change of the pedestrian extent.
    pub max_extent_rate_mps: T,
}

impl<T: Scalar> Default for InitConstants2d<T> {
    fn default() -> Self {
        Self {
            mean_height_m: T::lit(1.65),
            max_speed_mps: T::lit(3.0),
            max_extent_rate_mps: T::lit(0.3),
        }
    }
}

/// Prior knowledge used to initialize the 3D planar box filter. Extent priors
/// come from the width and height processes of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConstants3d<T: Scalar> {
    pub max_speed_mps: T,
}

impl<T: Scalar> InitConstants3d<T> {
    /// Initial velocity variance `(max_speed / 3)²`.
    pub fn velocity_variance(&self) -> T {
        let s = self.max_speed_mps / T::lit(3.0);
        s * s
    }
}

impl<T: Scalar> Default for InitConstants3d<T> {
    fn default() -> Self {
        Self {
            max_speed_mps: T::lit(3.0),
        }
    }
}

fn check_initial_measurement<T: Scalar>(z0: &DVector<T>) -> Result<()> {
    if z0.len() != MEAS_DIM {
        return Err(Error::dims("initial measurement", MEAS_DIM, z0.len()));
    }
    if !(z0[3] > T::zero()) {
        return Err(Error::NonPositiveHeight {
            height: z0[3].to_f64_lossy(),
        });
    }
    Ok(())
}

/// 2D box filter initialization: positions and extents from the detection,
/// zero rates with variances scaled by the apparent size of the pedestrian.
pub fn init_2d<T: Scalar>(z0: &DVector<T>, r: &DMatrix<T>, c: &InitConstants2d<T>) -> Result<GaussianEstimate<T>> {
    check_initial_measurement(z0)?;
    if r.shape() != (MEAS_DIM, MEAS_DIM) {
        return Err(Error::dims("measurement noise", "4x4", format!("{:?}", r.shape())));
    }
    let h: DMatrix<T> = measurement_matrix();
    let px_per_m = z0[3] / c.mean_height_m;
    let three = T::lit(3.0);
    let v_pos = (px_per_m * c.max_speed_mps / three).powi(2);
    let v_ext = (px_per_m * c.max_extent_rate_mps / three).powi(2);
    let mut cov = h.transpose() * r * &h;
    for (slot, v) in [(1, v_pos), (3, v_pos), (5, v_ext), (7, v_ext)] {
        cov[(slot, slot)] += v;
    }
    GaussianEstimate::new(h.transpose() * z0, symmetrize(&cov), 0, StateSpace::Box2d)
}

/// 3D planar box initialization.
///
/// The position moments come from an unscented transform of the noisy
/// back-projection of the detected bottom-center point, with the depth set
/// by the detected height and an uncertain metric height. Velocities start
/// at zero; width and height start at their process means and variances.
pub fn init_3d<T: Scalar>(
    z0: &DVector<T>,
    model: &ModelSet3d<T>,
    c: &InitConstants3d<T>,
) -> Result<GaussianEstimate<T>> {
    check_initial_measurement(z0)?;
    let params = &model.params;
    let cam = &model.camera;
    let pp = cam.principal_point_px();
    let focal = cam.focal_ratio();

    // Noise on (x, y, h) of the detection, plus the metric height.
    let keep = [0usize, 1, 3];
    let mut px = DMatrix::zeros(4, 4);
    for (i, &a) in keep.iter().enumerate() {
        for (j, &b) in keep.iter().enumerate() {
            px[(i, j)] = model.r[(a, b)];
        }
    }
    px[(3, 3)] = params.sigma_h * params.sigma_h;
    let mut mx = DVector::zeros(4);
    mx[3] = params.mean_h;

    let sigma = unscented_transform(&mx, &px, |x| {
        let apparent = z0[3] - x[2];
        if !(apparent > T::zero()) {
            return Err(Error::NonPositiveHeight {
                height: apparent.to_f64_lossy(),
            });
        }
        let k = x[3] / apparent;
        Ok(DVector::from_vec(vec![
            k * (z0[0] - pp.x - x[0]),
            k * (z0[1] - pp.y - x[1]),
            k * focal,
        ]))
    })?;
    let pos_cov = sigma.cov_y();

    let slots = [0usize, 2, 4];
    let mut mean = DVector::zeros(STATE_DIM);
    let mut cov = DMatrix::zeros(STATE_DIM, STATE_DIM);
    for (i, &a) in slots.iter().enumerate() {
        mean[a] = sigma.mean_y[i];
        for (j, &b) in slots.iter().enumerate() {
            cov[(a, b)] = pos_cov[(i, j)];
        }
    }
    let v = c.velocity_variance();
    for slot in [1, 3, 5] {
        cov[(slot, slot)] = v;
    }
    mean[6] = params.mean_w;
    mean[7] = params.mean_h;
    cov[(6, 6)] = params.sigma_w * params.sigma_w;
    cov[(7, 7)] = params.sigma_h * params.sigma_h;
    GaussianEstimate::new(mean, symmetrize(&cov), 0, StateSpace::Planar3d)
}
