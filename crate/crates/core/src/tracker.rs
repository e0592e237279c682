//! Single-object tracking over a detection sequence with one of the three filters.
//!
//! The filter is initialized at the first frame with a detection, predicted
//! once per elapsed frame, and updated only on frames that have a detection.
//! Every listed frame after initialization yields an estimate both in the
//! filter's own state space and as a bounding box.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::dataio::{semi_annotate_3d, BoundingBox, TrackSequence};
use crate::error::{Error, Result};
use crate::filters::{
    bot_init, bot_predict, bot_update, init_2d, init_3d, kf_predict, kf_update, project_estimate, ukf_predict,
    ukf_update, GaussianEstimate, InitConstants2d, InitConstants3d, StateSpace,
};
use crate::metrics::{evaluate_track, EvalSpace, TrackEvaluation};
use crate::models::{
    build_model_2d, build_model_3d, BotParams, Model2dParams, Model3dParams, ModelSet2d, ModelSet3d, R_NORMALIZED,
};
use crate::scalar::Scalar;
use crate::sim::Trial;

/// Indices of `[x, y, w, h]` in every 8-entry box state.
const BOX_SLOTS: [usize; 4] = [0, 2, 4, 6];
/// Indices of `[x, y, z, w, h]` in the 3D planar box state.
const PLANAR_SLOTS: [usize; 5] = [0, 2, 4, 6, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Kf2d,
    Bot,
    Ukf3d,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Kf2d, FilterKind::Bot, FilterKind::Ukf3d];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Kf2d => "kf2d",
            FilterKind::Bot => "bot",
            FilterKind::Ukf3d => "ukf3d",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown filter `{s}` (expected kf2d, bot or ukf3d)")))
    }
}

/// Models and constants shared by all filters of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerSetup<T: Scalar> {
    pub model2d: ModelSet2d<T>,
    pub model3d: ModelSet3d<T>,
    pub bot: BotParams<T>,
    pub init2d: InitConstants2d<T>,
    pub init3d: InitConstants3d<T>,
}

/// Model parameters before discretization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackerParams<T: Scalar> {
    pub model2d: Model2dParams<T>,
    pub model3d: Model3dParams<T>,
    pub bot: BotParams<T>,
    pub init2d: InitConstants2d<T>,
    pub init3d: InitConstants3d<T>,
}

impl<T: Scalar> TrackerSetup<T> {
    /// Builds every model for time step `dt` and resolution scale `gamma`.
    pub fn new(dt: T, gamma: T, camera: CameraIntrinsics<T>, p: &TrackerParams<T>) -> Result<Self> {
        let model2d = build_model_2d(dt, gamma, &p.model2d, &R_NORMALIZED)?;
        let model3d = build_model_3d(dt, camera, model2d.r.clone(), &p.model3d)?;
        Ok(Self {
            model2d,
            model3d,
            bot: p.bot,
            init2d: p.init2d,
            init3d: p.init3d,
        })
    }

    pub fn camera(&self) -> &CameraIntrinsics<T> {
        &self.model3d.camera
    }

    fn init(&self, kind: FilterKind, z: &DVector<T>) -> Result<GaussianEstimate<T>> {
        match kind {
            FilterKind::Kf2d => init_2d(z, &self.model2d.r, &self.init2d),
            FilterKind::Bot => bot_init(z, &self.bot),
            FilterKind::Ukf3d => init_3d(z, &self.model3d, &self.init3d),
        }
    }

    fn predict(&self, kind: FilterKind, est: &GaussianEstimate<T>) -> Result<GaussianEstimate<T>> {
        match kind {
            FilterKind::Kf2d => kf_predict(est, &self.model2d.f, &self.model2d.q, None),
            FilterKind::Bot => bot_predict(est, &self.bot),
            FilterKind::Ukf3d => ukf_predict(est, &self.model3d),
        }
    }

    fn update(&self, kind: FilterKind, pred: &GaussianEstimate<T>, z: &DVector<T>) -> Result<GaussianEstimate<T>> {
        match kind {
            FilterKind::Kf2d => kf_update(pred, z, &self.model2d.h, &self.model2d.r),
            FilterKind::Bot => bot_update(pred, z, &self.bot),
            FilterKind::Ukf3d => ukf_update(pred, z, &self.model3d),
        }
    }

    /// Bounding-box view of a native estimate.
    pub fn to_bbox(&self, kind: FilterKind, est: &GaussianEstimate<T>) -> Result<GaussianEstimate<T>> {
        match kind {
            FilterKind::Kf2d | FilterKind::Bot => Ok(est.select(&BOX_SLOTS, StateSpace::BoundingBox)),
            FilterKind::Ukf3d => project_estimate(est, &self.model3d),
        }
    }
}

/// Estimate at one listed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<T: Scalar> {
    pub native: GaussianEstimate<T>,
    pub bbox: GaussianEstimate<T>,
    /// Whether a detection was used at this frame.
    pub updated: bool,
}

/// Where and why a track stopped.
#[derive(Debug)]
pub struct TrackFailure {
    pub frame: i64,
    pub error: Error,
}

/// Output of one filter over one detection sequence.
#[derive(Debug)]
pub struct FilterRun<T: Scalar> {
    pub kind: FilterKind,
    pub frames: Vec<i64>,
    /// `None` before the first detection and after a failure.
    pub steps: Vec<Option<StepOutput<T>>>,
    pub failure: Option<TrackFailure>,
}

impl<T: Scalar> FilterRun<T> {
    pub fn bbox_series(&self) -> Vec<Option<GaussianEstimate<T>>> {
        self.steps.iter().map(|s| s.as_ref().map(|s| s.bbox.clone())).collect()
    }

    /// `[x, y, z, w, h]` block of the 3D filter; `None` for the 2D filters.
    pub fn planar_series(&self) -> Option<Vec<Option<GaussianEstimate<T>>>> {
        (self.kind == FilterKind::Ukf3d).then(|| {
            self.steps
                .iter()
                .map(|s| s.as_ref().map(|s| s.native.select(&PLANAR_SLOTS, StateSpace::Generic)))
                .collect()
        })
    }
}

/// Runs `kind` over `detections`, listed at strictly increasing `frames`.
pub fn run_filter<T: Scalar>(
    kind: FilterKind,
    setup: &TrackerSetup<T>,
    frames: &[i64],
    detections: &[Option<BoundingBox<T>>],
) -> Result<FilterRun<T>> {
    if frames.len() != detections.len() {
        return Err(Error::FrameMisalignment(format!(
            "{} frames, {} detection slots",
            frames.len(),
            detections.len()
        )));
    }
    if frames.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::FrameMisalignment("frames are not strictly increasing".into()));
    }
    let mut steps = Vec::with_capacity(frames.len());
    let mut current: Option<GaussianEstimate<T>> = None;
    let mut failure = None;
    for (&frame, det) in frames.iter().zip(detections) {
        let z = det.as_ref().map(BoundingBox::to_vector);
        let step = (|| -> Result<Option<(GaussianEstimate<T>, bool)>> {
            let Some(prev) = &current else {
                let Some(z) = &z else { return Ok(None) };
                let mut est = setup.init(kind, z)?;
                est.frame = frame;
                return Ok(Some((est, true)));
            };
            let mut est = prev.clone();
            while est.frame < frame {
                est = setup.predict(kind, &est)?;
            }
            match &z {
                Some(z) => Ok(Some((setup.update(kind, &est, z)?, true))),
                None => Ok(Some((est, false))),
            }
        })()
        .and_then(|s| match s {
            Some((native, updated)) => {
                let bbox = setup.to_bbox(kind, &native)?;
                Ok(Some(StepOutput { native, bbox, updated }))
            }
            None => Ok(None),
        });
        match step {
            Ok(out) => {
                if let Some(out) = &out {
                    current = Some(out.native.clone());
                }
                steps.push(out);
            }
            Err(error) => {
                failure = Some(TrackFailure { frame, error });
                break;
            }
        }
    }
    steps.resize_with(frames.len(), || None);
    Ok(FilterRun {
        kind,
        frames: frames.to_vec(),
        steps,
        failure,
    })
}

/// Runs `kind` on every simulated trial; results keep the trial order.
pub fn run_trials<T: Scalar>(
    kind: FilterKind,
    setup: &TrackerSetup<T>,
    frames: &[i64],
    trials: &[Trial<T>],
) -> Result<Vec<FilterRun<T>>> {
    trials
        .par_iter()
        .map(|dets| run_filter(kind, setup, frames, dets))
        .collect()
}

/// Bounding-box evaluation of a set of runs against the annotations, and for
/// the 3D filter the `[x, y, z, w, h]` evaluation against semi-annotations
/// built with `guessed_height_m`.
pub fn evaluate_runs<T: Scalar>(
    track: &TrackSequence<T>,
    runs: &[FilterRun<T>],
    setup: &TrackerSetup<T>,
    guessed_height_m: T,
) -> Result<(TrackEvaluation, Option<TrackEvaluation>)> {
    let truth2d: Vec<DVector<T>> = track.annotations.iter().map(BoundingBox::to_vector).collect();
    let boxes: Vec<_> = runs.iter().map(FilterRun::bbox_series).collect();
    let eval2d = evaluate_track(&track.frames, &truth2d, &boxes, EvalSpace::Bbox2d)?;
    let planar: Option<Vec<_>> = runs.iter().map(FilterRun::planar_series).collect();
    let eval3d = match planar {
        Some(series) if !series.is_empty() => {
            let truth3d = track
                .annotations
                .iter()
                .map(|a| semi_annotate_3d(a, setup.camera(), guessed_height_m).map(|s| s.to_vector()))
                .collect::<Result<Vec<_>>>()?;
            Some(evaluate_track(&track.frames, &truth3d, &series, EvalSpace::Planar3d)?)
        }
        _ => None,
    };
    Ok((eval2d, eval3d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn setup() -> TrackerSetup<f64> {
        let cam = CameraIntrinsics::new(1e-3, 1e-6, Vector2::new(960.0, 540.0)).unwrap();
        TrackerSetup::new(1.0 / 30.0, 1080.0, cam, &TrackerParams::default()).unwrap()
    }

    fn walking(n: usize) -> Vec<Option<BoundingBox<f64>>> {
        (0..n)
            .map(|k| Some(BoundingBox::new(800.0 + 2.0 * k as f64, 700.0, 80.0, 200.0)))
            .collect()
    }

    #[test]
    fn parses_filter_names() {
        for k in FilterKind::ALL {
            assert_eq!(k.name().parse::<FilterKind>().unwrap(), k);
        }
        assert!("ekf".parse::<FilterKind>().is_err());
    }

    #[test]
    fn waits_for_first_detection() {
        let s = setup();
        let mut dets = walking(5);
        dets[0] = None;
        dets[1] = None;
        let frames: Vec<i64> = (0..5).collect();
        for kind in FilterKind::ALL {
            let run = run_filter(kind, &s, &frames, &dets).unwrap();
            assert!(run.failure.is_none());
            assert!(run.steps[0].is_none() && run.steps[1].is_none());
            let first = run.steps[2].as_ref().unwrap();
            assert_eq!(first.native.frame, 2);
            assert!(first.updated);
            assert!(run.steps[3..].iter().all(Option::is_some));
        }
    }

    #[test]
    fn missing_detection_yields_prediction() {
        let s = setup();
        let mut dets = walking(6);
        dets[4] = None;
        let frames: Vec<i64> = (0..6).collect();
        for kind in FilterKind::ALL {
            let run = run_filter(kind, &s, &frames, &dets).unwrap();
            let prev = &run.steps[3].as_ref().unwrap().native;
            let expected = s.predict(kind, prev).unwrap();
            let step = run.steps[4].as_ref().unwrap();
            assert!(!step.updated);
            assert_eq!(step.native, expected);
        }
    }

    #[test]
    fn frame_gaps_predict_each_frame() {
        let s = setup();
        let dets = walking(3);
        let run = run_filter(FilterKind::Kf2d, &s, &[0, 1, 4], &dets).unwrap();
        let step1 = &run.steps[1].as_ref().unwrap().native;
        let mut est = step1.clone();
        for _ in 0..3 {
            est = s.predict(FilterKind::Kf2d, &est).unwrap();
        }
        let z = dets[2].unwrap().to_vector();
        let expected = s.update(FilterKind::Kf2d, &est, &z).unwrap();
        assert_eq!(run.steps[2].as_ref().unwrap().native, expected);
        assert!(run_filter(FilterKind::Kf2d, &s, &[0, 0, 1], &dets).is_err());
    }

    #[test]
    fn estimates_follow_detections() {
        let s = setup();
        let dets = walking(40);
        let frames: Vec<i64> = (0..40).collect();
        for kind in FilterKind::ALL {
            let run = run_filter(kind, &s, &frames, &dets).unwrap();
            let last = run.steps[39].as_ref().unwrap();
            let truth = dets[39].unwrap();
            assert!((last.bbox.mean[0] - truth.x).abs() < 5.0, "{kind}: {}", last.bbox.mean[0]);
            assert!((last.bbox.mean[3] - truth.h).abs() < 10.0, "{kind}: {}", last.bbox.mean[3]);
            assert!(last.bbox.is_valid() && last.native.is_valid());
        }
    }

    #[test]
    fn depth_failure_stops_the_track() {
        let s = setup();
        // A 1 px tall box is smaller than the detector noise spread, so
        // initialization sigma points cross the zero-height singularity.
        let dets = vec![Some(BoundingBox::new(960.0, 600.0, 1.0, 1.0)), Some(BoundingBox::new(960.0, 600.0, 1.0, 1.0))];
        let run = run_filter(FilterKind::Ukf3d, &s, &[0, 1], &dets).unwrap();
        let failure = run.failure.expect("tiny boxes cannot initialize the 3D filter");
        assert_eq!(failure.frame, 0);
        assert!(run.steps.iter().all(Option::is_none));
    }
}
