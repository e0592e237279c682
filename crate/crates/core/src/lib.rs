//! Monocular pedestrian tracking with an unconstrained 3D planar box model.
//!
//! The crate provides pinhole geometry ([`camera`]), model construction
//! ([`models`]), three filters ([`filters`]): a linear Kalman filter on a 2D
//! box model, a bag-of-tricks heuristic filter, and a square-root unscented
//! Kalman filter on the 3D model, together with a detection simulator
//! ([`sim`]), MOT-format I/O ([`dataio`]), consistency metrics ([`metrics`])
//! and the pipeline behind the command-line tool ([`cli`]).
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod camera;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod scalar;
pub mod sim;
pub mod tracker;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Camera = camera::CameraIntrinsics<f64>;
pub type Estimate = filters::GaussianEstimate<f64>;
pub type Model2d = models::ModelSet2d<f64>;
pub type Model3d = models::ModelSet3d<f64>;
