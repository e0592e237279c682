//! Discrete-time model matrices for the three filters.
//!
//! * 2D box model: four independent nearly-constant-velocity (NCV) pairs over
//!   `[x, ẋ, y, ẏ, w, ẇ, h, ḣ]` in pixels.
//! * 3D planar box model: NCV position/velocity in meters plus first-order
//!   autoregressive (Ornstein-Uhlenbeck) width and height, over
//!   `[x, ẋ, y, ẏ, z, ż, w, h]`, observed through the perspective projection.
//! * Bag-of-tricks box model: unit-step constant velocity with
//!   extent-proportional noise, over `[x, Tẋ, y, Tẏ, w, Tẇ, h, Tḣ]`.

use nalgebra::{DMatrix, DVector, Matrix2, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{check_depth, CameraIntrinsics};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dimension of every 8-entry state vector used here.
pub const STATE_DIM: usize = 8;
/// Dimension of a bounding-box measurement `[x, y, w, h]`.
pub const MEAS_DIM: usize = 4;

/// Measurement noise identified for the Faster R-CNN detector on MOT-17,
/// normalized by `γ²` (so `R = γ² · R_NORMALIZED`).
pub const R_NORMALIZED: [[f64; 4]; 4] = [
    [2.232e-5, 0.086e-5, -0.787e-5, -0.084e-5],
    [0.086e-5, 2.817e-5, 0.080e-5, -2.280e-5],
    [-0.787e-5, 0.080e-5, 2.036e-5, 0.266e-5],
    [-0.084e-5, -2.280e-5, 0.266e-5, 4.661e-5],
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcvParams<T> {
    /// Power spectral density of the driving white noise.
    pub psd: T,
    /// Sampling period in seconds.
    pub dt: T,
}

/// Transition and noise blocks of one NCV position/velocity pair.
pub fn ncv_discretize<T: Scalar>(p: NcvParams<T>) -> Result<(Matrix2<T>, Matrix2<T>)> {
    check_dt(p.dt)?;
    if !(p.psd >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "psd",
            reason: format!("must be >= 0, got {}", p.psd),
        });
    }
    let t = p.dt;
    let f = Matrix2::new(T::one(), t, T::zero(), T::one());
    let t2 = t * t / T::lit(2.0);
    let t3 = t * t * t / T::lit(3.0);
    let q = Matrix2::new(t3, t2, t2, t) * p.psd;
    Ok((f, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArParams<T> {
    /// Unconditional mean.
    pub mean: T,
    /// Unconditional standard deviation.
    pub stddev: T,
    /// Mean-reversion time constant in seconds.
    pub time_constant_s: T,
}

/// One step of a discretized Ornstein-Uhlenbeck process:
/// `p' = alpha·p + additive + w`, `var(w) = noise_var`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArStep<T> {
    pub alpha: T,
    pub additive: T,
    pub noise_var: T,
}

pub fn ar_discretize<T: Scalar>(p: ArParams<T>, dt: T) -> Result<ArStep<T>> {
    check_dt(dt)?;
    if !(p.time_constant_s > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "time_constant_s",
            reason: format!("must be > 0, got {}", p.time_constant_s),
        });
    }
    if !(p.stddev >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "stddev",
            reason: format!("must be >= 0, got {}", p.stddev),
        });
    }
    let alpha = (-dt / p.time_constant_s).exp();
    Ok(ArStep {
        alpha,
        additive: (T::one() - alpha) * p.mean,
        noise_var: p.stddev * p.stddev * (T::one() - alpha * alpha),
    })
}

/// Process-noise intensity implied by a maximal acceleration: `q ≈ a_max² · T`.
pub fn psd_from_max_acceleration<T: Scalar>(a_max: T, dt: T) -> Result<T> {
    check_dt(dt)?;
    if !(a_max >= T::zero()) {
        return Err(Error::InvalidParameter {
            name: "a_max",
            reason: format!("must be >= 0, got {a_max}"),
        });
    }
    Ok(a_max * a_max * dt)
}

fn check_dt<T: Scalar>(dt: T) -> Result<()> {
    if dt > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidTimestep {
            dt: dt.to_f64_lossy(),
        })
    }
}

/// Parameters of the 2D box model (PSDs in units of `γ²·px²s⁻³` per unit γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model2dParams<T: Scalar> {
    pub q_x_dot: T,
    pub q_y_dot: T,
    pub q_w_dot: T,
    pub q_h_dot: T,
}

impl<T: Scalar> Default for Model2dParams<T> {
    fn default() -> Self {
        Self {
            q_x_dot: T::lit(0.011),
            q_y_dot: T::lit(0.037),
            q_w_dot: T::lit(0.013),
            q_h_dot: T::lit(0.025),
        }
    }
}

/// Parameters of the 3D planar box model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model3dParams<T: Scalar> {
    /// Velocity PSDs in m²s⁻³.
    pub q_x_dot: T,
    pub q_y_dot: T,
    pub q_z_dot: T,
    pub mean_w: T,
    pub sigma_w: T,
    pub tau_w: T,
    pub mean_h: T,
    pub sigma_h: T,
    pub tau_h: T,
}

impl<T: Scalar> Model3dParams<T> {
    /// Pedestrian seen from a camera roughly parallel to the ground.
    pub fn pedestrian() -> Self {
        Self {
            q_x_dot: T::one(),
            q_y_dot: T::one(),
            q_z_dot: T::one(),
            mean_w: T::lit(0.85),
            sigma_w: T::lit(0.45 / 3.0),
            tau_w: T::lit(0.4),
            mean_h: T::lit(1.65),
            sigma_h: T::lit(0.3 / 3.0),
            tau_h: T::lit(4.0),
        }
    }

    /// Pedestrian seen from above: the box height behaves like the width.
    pub fn top_view() -> Self {
        let p = Self::pedestrian();
        Self {
            mean_h: p.mean_w,
            sigma_h: p.sigma_w,
            tau_h: p.tau_w,
            ..p
        }
    }

    pub fn width_process(&self) -> ArParams<T> {
        ArParams {
            mean: self.mean_w,
            stddev: self.sigma_w,
            time_constant_s: self.tau_w,
        }
    }

    pub fn height_process(&self) -> ArParams<T> {
        ArParams {
            mean: self.mean_h,
            stddev: self.sigma_h,
            time_constant_s: self.tau_h,
        }
    }
}

impl<T: Scalar> Default for Model3dParams<T> {
    fn default() -> Self {
        Self::pedestrian()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BotParams<T: Scalar> {
    pub zeta_r: T,
    pub zeta_rdot: T,
}

impl<T: Scalar> Default for BotParams<T> {
    fn default() -> Self {
        Self {
            zeta_r: T::lit(1.0 / 20.0),
            zeta_rdot: T::lit(1.0 / 160.0),
        }
    }
}

/// Selects `[x, y, w, h]` out of an 8-entry box state.
pub fn measurement_matrix<T: Scalar>() -> DMatrix<T> {
    let mut h = DMatrix::zeros(MEAS_DIM, STATE_DIM);
    for row in 0..MEAS_DIM {
        h[(row, 2 * row)] = T::one();
    }
    h
}

/// Detector noise covariance `γ² · normalized`, symmetrized.
pub fn measurement_noise<T: Scalar>(gamma: T, normalized: &[[f64; 4]; 4]) -> DMatrix<T> {
    let g2 = gamma * gamma;
    let r = DMatrix::from_fn(MEAS_DIM, MEAS_DIM, |i, j| g2 * T::lit(normalized[i][j]));
    symmetrize(&r)
}

pub(crate) fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

fn set_block2<T: Scalar>(m: &mut DMatrix<T>, at: usize, block: &Matrix2<T>) {
    m.view_mut((at, at), (2, 2)).copy_from(block);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet2d<T: Scalar> {
    pub f: DMatrix<T>,
    pub q: DMatrix<T>,
    pub h: DMatrix<T>,
    pub r: DMatrix<T>,
    pub gamma: T,
}

pub fn build_model_2d<T: Scalar>(
    dt: T,
    gamma: T,
    params: &Model2dParams<T>,
    r_normalized: &[[f64; 4]; 4],
) -> Result<ModelSet2d<T>> {
    check_dt(dt)?;
    if !(gamma > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be > 0, got {gamma}"),
        });
    }
    let g2 = gamma * gamma;
    let mut f = DMatrix::zeros(STATE_DIM, STATE_DIM);
    let mut q = DMatrix::zeros(STATE_DIM, STATE_DIM);
    let psds = [params.q_x_dot, params.q_y_dot, params.q_w_dot, params.q_h_dot];
    for (i, psd) in psds.into_iter().enumerate() {
        let (fb, qb) = ncv_discretize(NcvParams { psd: g2 * psd, dt })?;
        set_block2(&mut f, 2 * i, &fb);
        set_block2(&mut q, 2 * i, &qb);
    }
    Ok(ModelSet2d {
        f,
        q,
        h: measurement_matrix(),
        r: measurement_noise(gamma, r_normalized),
        gamma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet3d<T: Scalar> {
    pub f: DMatrix<T>,
    /// Additive term pulling the extents toward their means.
    pub m: DVector<T>,
    pub q: DMatrix<T>,
    pub h: DMatrix<T>,
    pub r: DMatrix<T>,
    pub camera: CameraIntrinsics<T>,
    pub params: Model3dParams<T>,
}

pub fn build_model_3d<T: Scalar>(
    dt: T,
    camera: CameraIntrinsics<T>,
    r: DMatrix<T>,
    params: &Model3dParams<T>,
) -> Result<ModelSet3d<T>> {
    check_dt(dt)?;
    if r.shape() != (MEAS_DIM, MEAS_DIM) {
        return Err(Error::dims("measurement noise", "4x4", format!("{:?}", r.shape())));
    }
    let mut f = DMatrix::zeros(STATE_DIM, STATE_DIM);
    let mut q = DMatrix::zeros(STATE_DIM, STATE_DIM);
    let psds = [params.q_x_dot, params.q_y_dot, params.q_z_dot];
    for (i, psd) in psds.into_iter().enumerate() {
        let (fb, qb) = ncv_discretize(NcvParams { psd, dt })?;
        set_block2(&mut f, 2 * i, &fb);
        set_block2(&mut q, 2 * i, &qb);
    }
    let width = ar_discretize(params.width_process(), dt)?;
    let height = ar_discretize(params.height_process(), dt)?;
    f[(6, 6)] = width.alpha;
    f[(7, 7)] = height.alpha;
    q[(6, 6)] = width.noise_var;
    q[(7, 7)] = height.noise_var;
    let mut m = DVector::zeros(STATE_DIM);
    m[6] = width.additive;
    m[7] = height.additive;
    Ok(ModelSet3d {
        f,
        m,
        q,
        h: measurement_matrix(),
        r,
        camera,
        params: *params,
    })
}

impl<T: Scalar> ModelSet3d<T> {
    /// The 2D box state seen by the camera for a 3D planar box state.
    pub fn project_state(&self, s: &DVector<T>) -> Result<DVector<T>> {
        project_state(&self.camera, s)
    }

    /// Noise-free measurement `[x, y, w, h]` of a 3D planar box state.
    pub fn measure(&self, s: &DVector<T>) -> Result<DVector<T>> {
        let p = project_state(&self.camera, s)?;
        Ok(DVector::from_vec(vec![p[0], p[2], p[4], p[6]]))
    }
}

/// Perspective projection of a planar 3D box state `[x, ẋ, y, ẏ, z, ż, w, h]`
/// onto the 2D box state `[x, ẋ, y, ẏ, w, ẇ, h, ḣ]`.
///
/// The extents carry no rate of their own, so the projected extent rates only
/// reflect the change of depth: `ṡ = -(f ż / (|px| z²)) · s`.
pub fn project_state<T: Scalar>(cam: &CameraIntrinsics<T>, s: &DVector<T>) -> Result<DVector<T>> {
    if s.len() != STATE_DIM {
        return Err(Error::dims("3D state", STATE_DIM, s.len()));
    }
    let z = s[4];
    check_depth(z)?;
    let pos = Point3::new(s[0], s[2], z);
    let vel = Vector3::new(s[1], s[3], s[5]);
    let ip = cam.project_point(&pos)?;
    let iv = cam.project_velocity(&pos, &vel)?;
    let scale = cam.focal_ratio() / z;
    let recession = s[5] / z;
    Ok(DVector::from_vec(vec![
        ip.x,
        iv.x,
        ip.y,
        iv.y,
        scale * s[6],
        -scale * recession * s[6],
        scale * s[7],
        -scale * recession * s[7],
    ]))
}

/// Unit-step constant-velocity transition of the bag-of-tricks filter.
pub fn bot_transition<T: Scalar>() -> DMatrix<T> {
    let mut f = DMatrix::identity(STATE_DIM, STATE_DIM);
    for i in 0..4 {
        f[(2 * i, 2 * i + 1)] = T::one();
    }
    f
}

/// `diag(w², h², w², h²) ⊗ diag(a, b)` as an 8×8 diagonal matrix.
pub(crate) fn extent_kron<T: Scalar>(w: T, h: T, a: T, b: T) -> DMatrix<T> {
    let (w2, h2) = (w * w, h * h);
    DMatrix::from_diagonal(&DVector::from_vec(vec![
        w2 * a,
        w2 * b,
        h2 * a,
        h2 * b,
        w2 * a,
        w2 * b,
        h2 * a,
        h2 * b,
    ]))
}

/// Process noise from the previous filtered width and height.
pub fn bot_process_noise<T: Scalar>(prev_w: T, prev_h: T, p: &BotParams<T>) -> DMatrix<T> {
    extent_kron(
        prev_w,
        prev_h,
        p.zeta_r * p.zeta_r,
        p.zeta_rdot * p.zeta_rdot,
    )
}

/// Measurement noise from the predicted width and height.
pub fn bot_measurement_noise<T: Scalar>(pred_w: T, pred_h: T, p: &BotParams<T>) -> DMatrix<T> {
    let z2 = p.zeta_r * p.zeta_r;
    let (w2, h2) = (pred_w * pred_w * z2, pred_h * pred_h * z2);
    DMatrix::from_diagonal(&DVector::from_vec(vec![w2, h2, w2, h2]))
}
