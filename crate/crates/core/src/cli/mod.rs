//! Pipeline behind the command-line tool: ingest a MOT sequence, associate
//! detections, run the selected filters per track, evaluate and write results.
//!
//! Output layout under the output directory:
//!
//! ```text
//! <sequence>/track_<id>/<filter>_native.csv      estimates in the filter's state space
//! <sequence>/track_<id>/<filter>_bbox.csv        estimates as bounding boxes
//! <sequence>/track_<id>/<filter>_metrics_2d.csv  per-frame RMSE/ANEES on boxes
//! <sequence>/track_<id>/ukf3d_metrics_3d.csv     per-frame RMSE/ANEES on [x, y, z, w, h]
//! <sequence>/summary.json                        medians, coverage, failures
//! ```
//!
//! With simulated detections, estimate files are suffixed with the trial index
//! and written only when `output.trial_estimates` is set.

pub mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::dataio::{parse_mot_file, write_mot_file, BoundingBox, MotFileKind, MotRecord, MotSequence, TrackSequence};
use crate::error::{Error, Result};
use crate::metrics::{write_eval_csv, TrackEvaluation};
use crate::sim::{simulate_detections, SimConfig, Trial};
use crate::tracker::{evaluate_runs, run_trials, FilterKind, FilterRun, TrackerSetup};

pub use config::{Dropout, RunConfig};
pub use output::{write_estimates, EstimateView};

/// Exit status when some track could not be processed to the end.
pub const EXIT_PARTIAL: i32 = 2;

/// Source of the detections fed to the filters.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectionSource {
    /// The sequence's own detection file, associated to the annotations.
    Real,
    /// Fresh Monte Carlo trials per the `[sim]` section.
    Simulated,
    /// Trial files previously written by `simulate`, one directory per track
    /// under the given root (`track_<id>/trial_<n>.txt`).
    Files(PathBuf),
}

/// Result of a pipeline command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub sequence: String,
    pub tracks: Vec<TrackSummary>,
    /// Files written, in order.
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn failures(&self) -> usize {
        self.tracks
            .iter()
            .flat_map(|t| &t.filters)
            .filter(|f| f.failed_trials > 0 || f.error.is_some())
            .count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures() > 0 {
            EXIT_PARTIAL
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackSummary {
    pub track_id: i64,
    pub first_frame: i64,
    pub frames: usize,
    pub detections: usize,
    pub filters: Vec<FilterSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterSummary {
    pub filter: FilterKind,
    pub trials: usize,
    pub failed_trials: usize,
    /// First failure message, if any.
    pub error: Option<String>,
    pub coverage: usize,
    pub median_rmse_2d: Option<f64>,
    pub median_anees_2d: Option<f64>,
    pub median_rmse_3d: Option<f64>,
    pub median_anees_3d: Option<f64>,
}

struct Prepared {
    seq: MotSequence,
    setup: TrackerSetup<f64>,
    tracks: Vec<TrackSequence<f64>>,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let dir = cfg
        .sequence
        .dir
        .as_ref()
        .ok_or_else(|| Error::Config("no sequence directory given".into()))?;
    let seq = MotSequence::load(dir)?;
    let camera = cfg.camera(&seq.info)?;
    let frame_rate = cfg.frame_rate(&seq.info);
    if !(frame_rate > 0.0) {
        return Err(Error::Config(format!("frame rate must be > 0, got {frame_rate}")));
    }
    let setup = TrackerSetup::new(1.0 / frame_rate, cfg.gamma(&seq.info), camera, &cfg.tracker_params())?;
    let ids = if cfg.sequence.track_ids.is_empty() {
        seq.object_ids(&cfg.sequence.annotations)
    } else {
        cfg.sequence.track_ids.clone()
    };
    let tracks = ids
        .iter()
        .map(|&id| {
            seq.track(id, &cfg.sequence.annotations, cfg.sequence.iou_threshold)
                .map_err(|e| match e {
                    Error::EmptyTrack => Error::Config(format!("track {id} has no usable annotations")),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared { seq, setup, tracks })
}

fn sequence_name(seq: &MotSequence) -> String {
    if seq.info.name.is_empty() {
        seq.dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".into())
    } else {
        seq.info.name.clone()
    }
}

fn track_dir(out: &Path, seq: &str, id: i64) -> PathBuf {
    out.join(seq).join(format!("track_{id}"))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn sim_config(cfg: &RunConfig, track: &TrackSequence<f64>, has_detections: bool) -> SimConfig<f64> {
    let mut sim = SimConfig::new(cfg.sim.trials, cfg.sim.seed);
    if cfg.sim.dropout == Dropout::Real && has_detections {
        sim.dropout_mask = Some(track.detection_mask());
    }
    sim
}

fn trial_file(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("trial_{trial:03}.txt"))
}

fn load_trials(dir: &Path, track: &TrackSequence<f64>) -> Result<Vec<Trial<f64>>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trial_") && n.ends_with(".txt"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no trial files in {}", dir.display())));
    }
    files
        .iter()
        .map(|path| {
            let records = parse_mot_file(path, MotFileKind::Detection)?;
            let mut trial: Trial<f64> = vec![None; track.len()];
            for r in records {
                let k = r.frame - track.first_frame;
                if let Ok(pos) = track.frames.binary_search(&k) {
                    trial[pos] = Some(r.bbox());
                }
            }
            Ok(trial)
        })
        .collect()
}

struct FilterOutput {
    kind: FilterKind,
    runs: Vec<FilterRun<f64>>,
    eval: Result<(TrackEvaluation, Option<TrackEvaluation>)>,
}

fn process_track(
    cfg: &RunConfig,
    setup: &TrackerSetup<f64>,
    track: &TrackSequence<f64>,
    trials: &[Trial<f64>],
) -> Result<Vec<FilterOutput>> {
    cfg.filters
        .selected
        .iter()
        .map(|&kind| {
            let runs = run_trials(kind, setup, &track.frames, trials)?;
            let eval = evaluate_runs(track, &runs, setup, cfg.eval.guessed_height_m);
            Ok(FilterOutput { kind, runs, eval })
        })
        .collect()
}

fn write_track(
    cfg: &RunConfig,
    dir: &Path,
    track: &TrackSequence<f64>,
    outputs: &[FilterOutput],
    files: &mut Vec<PathBuf>,
) -> Result<Vec<FilterSummary>> {
    create_dir(dir)?;
    let mut summaries = Vec::new();
    for out in outputs {
        let single = out.runs.len() == 1;
        let mut error = out
            .runs
            .iter()
            .find_map(|r| r.failure.as_ref())
            .map(|f| format!("frame {}: {}", track.first_frame + f.frame, f.error));
        let mut failed = out.runs.iter().filter(|r| r.failure.is_some()).count();
        if single || cfg.output.trial_estimates {
            for (i, run) in out.runs.iter().enumerate() {
                let suffix = if single { String::new() } else { format!("_trial{i:03}") };
                for (view, tag) in [(EstimateView::Native, "native"), (EstimateView::BoundingBox, "bbox")] {
                    let path = dir.join(format!("{}{suffix}_{tag}.csv", out.kind));
                    let invalid = write_estimates(&path, run, view, track.first_frame, cfg.output.full_covariance)?;
                    files.push(path);
                    if let Some(frame) = invalid {
                        if run.failure.is_none() {
                            failed += 1;
                        }
                        error.get_or_insert_with(|| format!("frame {frame}: covariance is not symmetric PSD"));
                    }
                }
            }
        }
        let mut summary = FilterSummary {
            filter: out.kind,
            trials: out.runs.len(),
            failed_trials: failed,
            error,
            coverage: 0,
            median_rmse_2d: None,
            median_anees_2d: None,
            median_rmse_3d: None,
            median_anees_3d: None,
        };
        match &out.eval {
            Ok((e2, e3)) => {
                let path = dir.join(format!("{}_metrics_2d.csv", out.kind));
                write_csv(&path, e2)?;
                files.push(path);
                summary.coverage = e2.coverage();
                summary.median_rmse_2d = e2.rmse.median();
                summary.median_anees_2d = e2.anees.median();
                if let Some(e3) = e3 {
                    let path = dir.join(format!("{}_metrics_3d.csv", out.kind));
                    write_csv(&path, e3)?;
                    files.push(path);
                    summary.median_rmse_3d = e3.rmse.median();
                    summary.median_anees_3d = e3.anees.median();
                }
            }
            Err(e) => {
                summary.error.get_or_insert_with(|| format!("evaluation failed: {e}"));
            }
        }
        summaries.push(summary);
    }
    Ok(summaries)
}

fn write_csv(path: &Path, eval: &TrackEvaluation) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_eval_csv(std::io::BufWriter::new(file), eval).map_err(|e| Error::io(path, e))
}

/// Runs the selected filters on every selected track and writes estimates,
/// metrics and a JSON summary.
pub fn run(cfg: &RunConfig, source: &DetectionSource) -> Result<Outcome> {
    cfg.validate()?;
    let Prepared { seq, setup, tracks } = prepare(cfg)?;
    let name = sequence_name(&seq);
    let has_detections = seq.detections.is_some();
    if *source == DetectionSource::Real && !has_detections {
        return Err(Error::Config(format!(
            "{} has no det/det.txt; use simulated detections instead",
            seq.dir.display()
        )));
    }

    let results = tracks
        .par_iter()
        .map(|track| {
            let trials = match source {
                DetectionSource::Real => vec![track.detections.clone()],
                DetectionSource::Simulated => simulate_detections(track, &sim_config(cfg, track, has_detections))?,
                DetectionSource::Files(root) => load_trials(&root.join(format!("track_{}", track.object_id)), track)?,
            };
            process_track(cfg, &setup, track, &trials)
        })
        .collect::<Result<Vec<_>>>()?;

    let out_dir = &cfg.output.dir;
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    for (track, outputs) in tracks.iter().zip(&results) {
        let dir = track_dir(out_dir, &name, track.object_id);
        let filters = write_track(cfg, &dir, track, outputs, &mut files)?;
        summaries.push(TrackSummary {
            track_id: track.object_id,
            first_frame: track.first_frame,
            frames: track.len(),
            detections: track.detection_mask().iter().filter(|&&d| d).count(),
            filters,
        });
    }
    let outcome = Outcome {
        sequence: name.clone(),
        tracks: summaries,
        files,
    };
    let summary_path = out_dir.join(&name).join("summary.json");
    create_dir(summary_path.parent().unwrap_or(out_dir))?;
    let json = serde_json::to_string_pretty(&outcome).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&summary_path, json + "\n").map_err(|e| Error::io(&summary_path, e))?;
    let mut outcome = outcome;
    outcome.files.push(summary_path);
    Ok(outcome)
}

/// Writes `sim.trials` detection files per selected track in MOT detection
/// layout (original frame numbers), under `<out>/<sequence>/track_<id>/`.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let Prepared { seq, tracks, .. } = prepare(cfg)?;
    let name = sequence_name(&seq);
    let has_detections = seq.detections.is_some();
    let mut files = Vec::new();
    for track in &tracks {
        let trials = simulate_detections(track, &sim_config(cfg, track, has_detections))?;
        let dir = track_dir(&cfg.output.dir, &name, track.object_id);
        create_dir(&dir)?;
        for (i, trial) in trials.iter().enumerate() {
            let records: Vec<MotRecord> = track
                .frames
                .iter()
                .zip(trial)
                .filter_map(|(k, d)| d.as_ref().map(|b| MotRecord::detection(track.first_frame + k, b)))
                .collect();
            let path = trial_file(&dir, i);
            write_mot_file(&path, &records)?;
            files.push(path);
        }
    }
    Ok(files)
}

/// Human-readable summary of the selected tracks of a sequence.
pub fn inspect(cfg: &RunConfig) -> Result<String> {
    use std::fmt::Write as _;
    let Prepared { seq, setup, tracks } = prepare(cfg)?;
    let cam = setup.camera();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "sequence {}: {}x{} px at {} fps, gamma {} px, principal point ({}, {})",
        sequence_name(&seq),
        seq.info.image_width,
        seq.info.image_height,
        cfg.frame_rate(&seq.info),
        cfg.gamma(&seq.info),
        cam.principal_point_px().x,
        cam.principal_point_px().y
    );
    let _ = writeln!(
        s,
        "{} annotation rows, {} detection rows",
        seq.annotations.len(),
        seq.detections.as_ref().map_or(0, Vec::len)
    );
    let _ = writeln!(s, "track  first  frames  detections  mean_h_px");
    for t in &tracks {
        let dets = t.detection_mask().iter().filter(|&&d| d).count();
        let mean_h = t.annotations.iter().map(|a: &BoundingBox<f64>| a.h).sum::<f64>() / t.len() as f64;
        let _ = writeln!(s, "{:>5}  {:>5}  {:>6}  {:>10}  {:>9.1}", t.object_id, t.first_frame, t.len(), dets, mean_h);
    }
    Ok(s)
}
