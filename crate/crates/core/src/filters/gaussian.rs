use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::is_symmetric_psd;
use crate::scalar::Scalar;

/// Which state space an estimate lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateSpace {
    /// `[x, ẋ, y, ẏ, w, ẇ, h, ḣ]`, pixels and pixels per second.
    Box2d,
    /// `[x, Tẋ, y, Tẏ, w, Tẇ, h, Tḣ]`, all in pixels.
    BoxBot,
    /// `[x, ẋ, y, ẏ, z, ż, w, h]`, meters and meters per second.
    Planar3d,
    /// Bounding box `[x, y, w, h]` in pixels.
    BoundingBox,
    /// Anything else (generic use in tests and transforms).
    Generic,
}

/// Mean and error covariance of a state at frame `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEstimate<T: Scalar> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
    pub frame: i64,
    pub space: StateSpace,
}

impl<T: Scalar> GaussianEstimate<T> {
    pub fn new(mean: DVector<T>, cov: DMatrix<T>, frame: i64, space: StateSpace) -> Result<Self> {
        let n = mean.len();
        if cov.shape() != (n, n) {
            return Err(Error::dims("estimate covariance", format!("{n}x{n}"), format!("{:?}", cov.shape())));
        }
        Ok(Self {
            mean,
            cov,
            frame,
            space,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Checks the covariance invariants (symmetric, numerically PSD).
    pub fn is_valid(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && is_symmetric_psd(&self.cov)
    }

    /// Sub-estimate over the listed state indices.
    pub fn select(&self, indices: &[usize], space: StateSpace) -> Self {
        let mean = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
            self.cov[(indices[r], indices[c])]
        });
        Self {
            mean,
            cov,
            frame: self.frame,
            space,
        }
    }
}
