//! Filter recursions: linear Kalman filter on the 2D box model, the
//! bag-of-tricks heuristic filter, and the unscented Kalman filter on the
//! 3D planar box model, plus measurement-based initialization for each.
//!
//! Every step is a pure function from an estimate (and measurement) to a new
//! estimate. Frames without a detection are handled by the caller, which
//! simply skips the update.

mod bot;
mod gaussian;
mod init;
mod kalman;
mod ukf;
mod unscented;

pub use bot::{bot_init, bot_predict, bot_update};
pub use gaussian::{GaussianEstimate, StateSpace};
pub use init::{init_2d, init_3d, InitConstants2d, InitConstants3d};
pub use kalman::{joseph_covariance, kalman_gain, kf_predict, kf_update};
pub use ukf::{project_estimate, ukf_predict, ukf_update, ukf_update_with};
pub use unscented::{unscented_transform, SigmaSet};
