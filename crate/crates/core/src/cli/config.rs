//! Run configuration, read from TOML with one section per module.
//!
//! Every key is optional; missing keys take the defaults below.
//!
//! ```toml
//! [sequence]
//! dir = "data/MOT17/train/MOT17-02-FRCNN"
//! track_ids = [2]
//! iou_threshold = 0.5
//!
//! [camera]
//! focal_length_m = 1e-3
//! pixel_size_m = 1e-6
//! # principal_point_px = [960.0, 540.0]   # defaults to the image center
//!
//! [timing]
//! # frame_rate = 30.0                     # defaults to seqinfo.ini
//! # gamma = 1080.0                        # defaults to min(width, height)
//!
//! [filters]
//! selected = ["kf2d", "bot", "ukf3d"]
//!
//! [sim]
//! trials = 200
//! seed = 7
//! dropout = "real"                        # or "none"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::dataio::{AnnotationFilter, SequenceInfo};
use crate::error::{Error, Result};
use crate::filters::{InitConstants2d, InitConstants3d};
use crate::models::{BotParams, Model2dParams, Model3dParams};
use crate::tracker::{FilterKind, TrackerParams};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sequence: SequenceConfig,
    pub camera: CameraConfig,
    pub timing: TimingConfig,
    pub filters: FiltersConfig,
    pub model2d: Model2dParams<f64>,
    pub model3d: Model3dParams<f64>,
    pub bot: BotParams<f64>,
    pub init2d: InitConstants2d<f64>,
    pub init3d: InitConstants3d<f64>,
    pub sim: SimSettings,
    pub eval: EvalConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    /// MOT sequence directory holding `seqinfo.ini`, `gt/gt.txt` and `det/det.txt`.
    pub dir: Option<PathBuf>,
    /// Objects to track; empty selects every annotated pedestrian.
    pub track_ids: Vec<i64>,
    pub iou_threshold: f64,
    pub annotations: AnnotationFilter,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            dir: None,
            track_ids: Vec::new(),
            iou_threshold: 0.5,
            annotations: AnnotationFilter::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub focal_length_m: f64,
    pub pixel_size_m: f64,
    pub principal_point_px: Option<[f64; 2]>,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            focal_length_m: 1e-3,
            pixel_size_m: 1e-6,
            principal_point_px: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    pub frame_rate: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiltersConfig {
    pub selected: Vec<FilterKind>,
}

impl Default for FiltersConfig {
    fn default() -> Self {
        Self {
            selected: FilterKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dropout {
    /// Keep the frames where the real detector found the object.
    Real,
    /// Simulate a detection at every frame.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub trials: usize,
    pub seed: u64,
    pub dropout: Dropout,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 7,
            dropout: Dropout::Real,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Metric height assumed when building 3D reference positions.
    pub guessed_height_m: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { guessed_height_m: 1.66 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Append the upper triangle of each covariance to the estimate rows.
    pub full_covariance: bool,
    /// Write estimate files for every simulated trial, not only metrics.
    pub trial_estimates: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            full_covariance: true,
            trial_estimates: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.filters.selected.is_empty() {
            return bad("filters.selected must name at least one filter");
        }
        if let Some(fr) = self.timing.frame_rate {
            if !(fr > 0.0 && fr.is_finite()) {
                return bad("timing.frame_rate must be > 0");
            }
        }
        if let Some(g) = self.timing.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad("timing.gamma must be > 0");
            }
        }
        if self.sim.trials == 0 {
            return bad("sim.trials must be at least 1");
        }
        if !(self.eval.guessed_height_m > 0.0) {
            return bad("eval.guessed_height_m must be > 0");
        }
        if !(0.0..=1.0).contains(&self.sequence.iou_threshold) {
            return bad("sequence.iou_threshold must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn tracker_params(&self) -> TrackerParams<f64> {
        TrackerParams {
            model2d: self.model2d,
            model3d: self.model3d,
            bot: self.bot,
            init2d: self.init2d,
            init3d: self.init3d,
        }
    }

    pub fn camera(&self, info: &SequenceInfo) -> Result<CameraIntrinsics<f64>> {
        let pp = self
            .camera
            .principal_point_px
            .map(|[u, v]| Vector2::new(u, v))
            .unwrap_or_else(|| Vector2::new(info.image_width / 2.0, info.image_height / 2.0));
        CameraIntrinsics::new(self.camera.focal_length_m, self.camera.pixel_size_m, pp)
    }

    pub fn frame_rate(&self, info: &SequenceInfo) -> f64 {
        self.timing.frame_rate.unwrap_or(info.frame_rate)
    }

    pub fn gamma(&self, info: &SequenceInfo) -> f64 {
        self.timing.gamma.unwrap_or(info.image_width.min(info.image_height))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.model2d.q_y_dot, 0.037);
        assert_eq!(cfg.model3d.tau_h, 4.0);
        assert_eq!(cfg.bot.zeta_rdot, 1.0 / 160.0);
        assert_eq!(cfg.sim.trials, 200);
        assert_eq!(cfg.filters.selected, FilterKind::ALL.to_vec());
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = RunConfig::from_toml(
            "[camera]\nprincipal_point_px = [100.0, 50.0]\n[model3d]\ntau_h = 2.0\n[filters]\nselected = [\"ukf3d\"]\n[sim]\ndropout = \"none\"\n",
        )
        .unwrap();
        assert_eq!(cfg.model3d.tau_h, 2.0);
        assert_eq!(cfg.model3d.mean_h, 1.65);
        assert_eq!(cfg.filters.selected, vec![FilterKind::Ukf3d]);
        assert_eq!(cfg.sim.dropout, Dropout::None);
        let info = SequenceInfo {
            name: "s".into(),
            image_width: 1920.0,
            image_height: 1080.0,
            frame_rate: 30.0,
        };
        assert_eq!(cfg.camera(&info).unwrap().principal_point_px(), Vector2::new(100.0, 50.0));
        assert_eq!(cfg.gamma(&info), 1080.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[camera]\nfocal = 1.0\n").is_err());
        assert!(RunConfig::from_toml("[filters]\nselected = []\n").is_err());
        assert!(RunConfig::from_toml("[filters]\nselected = [\"ekf\"]\n").is_err());
        assert!(RunConfig::from_toml("[timing]\nframe_rate = 0.0\n").is_err());
        assert!(RunConfig::from_toml("[sim]\ntrials = 0\n").is_err());
    }
}
