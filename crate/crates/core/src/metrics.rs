//! Root mean squared error and average normalized estimation error squared
//! over Monte Carlo trials, per frame, with time medians.

use std::io::Write;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::filters::GaussianEstimate;
use crate::scalar::Scalar;

/// Space in which estimates are compared with the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSpace {
    /// Bounding box `[x, y, w, h]` in pixels.
    Bbox2d,
    /// `[x, y, z, w, h]` in meters.
    Planar3d,
}

impl EvalSpace {
    pub fn dim(self) -> usize {
        match self {
            EvalSpace::Bbox2d => 4,
            EvalSpace::Planar3d => 5,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            EvalSpace::Bbox2d => "2d",
            EvalSpace::Planar3d => "3d",
        }
    }
}

fn check_len<T: Scalar>(truth: &DVector<T>, v: &DVector<T>) -> Result<()> {
    if v.len() != truth.len() {
        return Err(Error::dims("estimate", truth.len(), v.len()));
    }
    Ok(())
}

/// `sqrt(mean ‖x̂ − x‖²)` over the estimates.
pub fn rmse<T: Scalar>(truth: &DVector<T>, means: &[DVector<T>]) -> Result<T> {
    if means.is_empty() {
        return Err(Error::dims("estimates", "at least 1", 0));
    }
    let mut acc = T::zero();
    for m in means {
        check_len(truth, m)?;
        acc += (m - truth).norm_squared();
    }
    Ok((acc / T::lit(means.len() as f64)).sqrt())
}

/// Normalized estimation error squared `eᵀ P⁻¹ e`.
pub fn nees<T: Scalar>(truth: &DVector<T>, est: &GaussianEstimate<T>) -> Result<T> {
    check_len(truth, &est.mean)?;
    let chol = est.cov.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let e = &est.mean - truth;
    let l = chol.l();
    if l.diagonal().iter().any(|d| !(*d > T::zero())) {
        return Err(Error::SingularCovariance);
    }
    let w = l.solve_lower_triangular(&e).ok_or(Error::SingularCovariance)?;
    Ok(w.norm_squared())
}

/// `(1 / (M n)) Σ eᵀ P⁻¹ e` over `M` estimates of an `n`-dimensional truth.
pub fn anees<T: Scalar>(truth: &DVector<T>, estimates: &[GaussianEstimate<T>]) -> Result<T> {
    if estimates.is_empty() {
        return Err(Error::dims("estimates", "at least 1", 0));
    }
    let mut acc = T::zero();
    for est in estimates {
        acc += nees(truth, est)?;
    }
    Ok(acc / T::lit((estimates.len() * truth.len()) as f64))
}

/// Median of the finite values, averaging the two middle ones for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Per-frame values of one metric. `None` marks frames without any estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSeries {
    pub frames: Vec<i64>,
    pub values: Vec<Option<f64>>,
    pub space: EvalSpace,
}

impl EvalSeries {
    pub fn defined(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Median over the frames where the metric is defined.
    pub fn median(&self) -> Option<f64> {
        median(&self.defined())
    }
}

/// RMSE and ANEES series of one track, with the number of trials that
/// produced an estimate at each frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackEvaluation {
    pub rmse: EvalSeries,
    pub anees: EvalSeries,
    pub n_trials: Vec<usize>,
}

impl TrackEvaluation {
    /// Frames with at least one estimate.
    pub fn coverage(&self) -> usize {
        self.n_trials.iter().filter(|&&n| n > 0).count()
    }
}

/// Evaluates per-trial estimate series against a truth series.
///
/// `estimates[trial][k]` must already live in `space` (4-dim boxes or the
/// 5-dim `[x, y, z, w, h]` block). Frames where no trial has an estimate
/// are left undefined.
pub fn evaluate_track<T: Scalar>(
    frames: &[i64],
    truth: &[DVector<T>],
    estimates: &[Vec<Option<GaussianEstimate<T>>>],
    space: EvalSpace,
) -> Result<TrackEvaluation> {
    if truth.len() != frames.len() {
        return Err(Error::FrameMisalignment(format!(
            "{} frames, {} truth vectors",
            frames.len(),
            truth.len()
        )));
    }
    if let Some(bad) = estimates.iter().position(|e| e.len() != frames.len()) {
        return Err(Error::FrameMisalignment(format!(
            "trial {bad} has {} estimates for {} frames",
            estimates[bad].len(),
            frames.len()
        )));
    }
    let n = space.dim();
    let mut rmse_values = Vec::with_capacity(frames.len());
    let mut anees_values = Vec::with_capacity(frames.len());
    let mut counts = Vec::with_capacity(frames.len());
    for (k, x) in truth.iter().enumerate() {
        if x.len() != n {
            return Err(Error::dims("truth", n, x.len()));
        }
        let present: Vec<GaussianEstimate<T>> = estimates.iter().filter_map(|trial| trial[k].clone()).collect();
        counts.push(present.len());
        if present.is_empty() {
            rmse_values.push(None);
            anees_values.push(None);
            continue;
        }
        let means: Vec<DVector<T>> = present.iter().map(|e| e.mean.clone()).collect();
        rmse_values.push(Some(rmse(x, &means)?.to_f64_lossy()));
        anees_values.push(Some(anees(x, &present)?.to_f64_lossy()));
    }
    Ok(TrackEvaluation {
        rmse: EvalSeries {
            frames: frames.to_vec(),
            values: rmse_values,
            space,
        },
        anees: EvalSeries {
            frames: frames.to_vec(),
            values: anees_values,
            space,
        },
        n_trials: counts,
    })
}

/// Writes `frame,rmse,anees,n_trials,space`, skipping undefined frames.
pub fn write_eval_csv<W: Write>(out: W, eval: &TrackEvaluation) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "rmse", "anees", "n_trials", "space"])?;
    let tag = eval.rmse.space.tag();
    for (k, frame) in eval.rmse.frames.iter().enumerate() {
        if let (Some(r), Some(a)) = (eval.rmse.values[k], eval.anees.values[k]) {
            w.write_record([
                frame.to_string(),
                r.to_string(),
                a.to_string(),
                eval.n_trials[k].to_string(),
                tag.to_string(),
            ])?;
        }
    }
    w.flush()
}
