//! Monte Carlo detection simulator.
//!
//! Each trial perturbs the annotation boxes with zero-mean Gaussian noise.
//! Draws come from a ChaCha stream keyed by `(seed, trial, frame)`, so any
//! trial can be regenerated on its own and trials can run in parallel.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dataio::{BoundingBox, TrackSequence};
use crate::error::{Error, Result};
use crate::linalg::{is_symmetric_psd, sqrt_psd};
use crate::models::{measurement_noise, MEAS_DIM, R_NORMALIZED};
use crate::scalar::Scalar;

/// One simulated detection sequence, aligned with the track's frames.
pub type Trial<T> = Vec<Option<BoundingBox<T>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T: Scalar> {
    pub trials: usize,
    pub seed: u64,
    /// Detection availability per track frame; `None` keeps every frame.
    pub dropout_mask: Option<Vec<bool>>,
    /// Detector noise; `None` uses the default detector covariance scaled by
    /// the smaller image side.
    pub noise_cov: Option<DMatrix<T>>,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            dropout_mask: None,
            noise_cov: None,
        }
    }
}

/// Random stream for one `(trial, frame)` cell.
pub fn cell_rng(seed: u64, trial: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 32) ^ frame);
    rng
}

fn standard_normal_vector<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> DVector<T> {
    DVector::from_fn(n, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        T::lit(v)
    })
}

/// Generates `cfg.trials` noisy detection sequences for `track`.
pub fn simulate_detections<T: Scalar>(track: &TrackSequence<T>, cfg: &SimConfig<T>) -> Result<Vec<Trial<T>>> {
    if track.annotations.is_empty() {
        return Err(Error::EmptyTrack);
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "must be at least 1".into(),
        });
    }
    let n = track.annotations.len();
    if let Some(mask) = &cfg.dropout_mask {
        if mask.len() != n {
            return Err(Error::FrameMisalignment(format!(
                "dropout mask has {} entries for {n} frames",
                mask.len()
            )));
        }
    }
    let cov = match &cfg.noise_cov {
        Some(c) => c.clone(),
        None => {
            let gamma = track.image_size.0.min(track.image_size.1);
            measurement_noise(T::lit(gamma), &R_NORMALIZED)
        }
    };
    if cov.shape() != (MEAS_DIM, MEAS_DIM) {
        return Err(Error::dims("noise covariance", "4x4", format!("{:?}", cov.shape())));
    }
    if !is_symmetric_psd(&cov) {
        return Err(Error::InvalidParameter {
            name: "noise_cov",
            reason: "must be symmetric positive semidefinite".into(),
        });
    }
    let l = sqrt_psd(&cov)?;

    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            track
                .annotations
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let present = cfg.dropout_mask.as_ref().is_none_or(|m| m[k]);
                    present.then(|| {
                        let mut rng = cell_rng(cfg.seed, trial as u64, track.frames[k] as u64);
                        let v = &l * standard_normal_vector::<T>(&mut rng, MEAS_DIM);
                        BoundingBox::new(a.x + v[0], a.y + v[1], a.w + v[2], a.h + v[3])
                    })
                })
                .collect()
        })
        .collect();
    Ok(trials)
}
