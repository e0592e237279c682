//! MOT-challenge style ingestion, box conversions, a greedy IoU associator and
//! pseudo-3D ground truth derived from 2D annotations.
//!
//! MOT files are comma separated with one box per row:
//! `frame,id,bb_left,bb_top,bb_width,bb_height,conf[,...]`. Ground-truth rows
//! carry `class,visibility` after `conf`; detection rows carry `id = -1`.
//! Numbers are written back in shortest round-trip decimal form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DVector, Vector5};
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Axis-aligned box described by its bottom-center point, width and height (pixels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    /// From MOT top-left form. The image `v` axis points down, so the bottom
    /// edge is `top + h`.
    pub fn from_top_left(left: T, top: T, w: T, h: T) -> Self {
        Self {
            x: left + w / T::lit(2.0),
            y: top + h,
            w,
            h,
        }
    }

    /// Back to `(left, top, w, h)`.
    pub fn to_top_left(&self) -> (T, T, T, T) {
        (self.x - self.w / T::lit(2.0), self.y - self.h, self.w, self.h)
    }

    pub fn to_vector(&self) -> DVector<T> {
        DVector::from_vec(vec![self.x, self.y, self.w, self.h])
    }

    pub fn from_slice(v: &[T]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn area(&self) -> T {
        self.w.max(T::zero()) * self.h.max(T::zero())
    }

    pub fn iou(&self, other: &Self) -> T {
        let (l1, t1, w1, h1) = self.to_top_left();
        let (l2, t2, w2, h2) = other.to_top_left();
        let iw = ((l1 + w1).min(l2 + w2) - l1.max(l2)).max(T::zero());
        let ih = ((t1 + h1).min(t2 + h2) - t1.max(t2)).max(T::zero());
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union > T::zero() {
            inter / union
        } else {
            T::zero()
        }
    }
}

/// `(left, top, w, h)` → bottom-center box.
pub fn to_bottom_center<T: Scalar>(left: T, top: T, w: T, h: T) -> BoundingBox<T> {
    BoundingBox::from_top_left(left, top, w, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotFileKind {
    Annotation,
    Detection,
}

/// One row of a MOT file.
#[derive(Debug, Clone, PartialEq)]
pub struct MotRecord {
    pub frame: i64,
    pub id: i64,
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub conf: f64,
    /// Trailing columns: `class, visibility` for ground truth, world
    /// coordinates (usually `-1`) for detections.
    pub extra: Vec<f64>,
}

impl MotRecord {
    pub fn bbox<T: Scalar>(&self) -> BoundingBox<T> {
        BoundingBox::from_top_left(
            T::lit(self.left),
            T::lit(self.top),
            T::lit(self.width),
            T::lit(self.height),
        )
    }

    pub fn class(&self) -> Option<i64> {
        self.extra.first().map(|c| *c as i64)
    }

    pub fn visibility(&self) -> Option<f64> {
        self.extra.get(1).copied()
    }

    /// A detection row for `b` in canonical MOT layout.
    pub fn detection<T: Scalar>(frame: i64, b: &BoundingBox<T>) -> Self {
        let (l, t, w, h) = b.to_top_left();
        Self {
            frame,
            id: -1,
            left: l.to_f64_lossy(),
            top: t.to_f64_lossy(),
            width: w.to_f64_lossy(),
            height: h.to_f64_lossy(),
            conf: 1.0,
            extra: vec![-1.0, -1.0, -1.0],
        }
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_integer(field: &str) -> Option<i64> {
    field.parse::<i64>().ok().or_else(|| {
        let v = field.parse::<f64>().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Parses MOT rows from text. `origin` only labels error messages.
pub fn parse_mot_str(text: &str, kind: MotFileKind, origin: &Path) -> Result<Vec<MotRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(origin, line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() < 7 {
            return Err(parse_error(origin, line, format!("expected at least 7 fields, found {}", row.len())));
        }
        let frame = parse_integer(&row[0]).ok_or_else(|| parse_error(origin, line, "frame is not an integer"))?;
        let id = parse_integer(&row[1]).ok_or_else(|| parse_error(origin, line, "id is not an integer"))?;
        let mut nums = Vec::with_capacity(row.len() - 2);
        for (i, field) in row.iter().enumerate().skip(2) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(origin, line, format!("field {} is not a number: `{field}`", i + 1)))?;
            nums.push(v);
        }
        if nums[2] < 0.0 || nums[3] < 0.0 {
            return Err(parse_error(origin, line, "negative box size"));
        }
        if kind == MotFileKind::Annotation && row.len() < 9 && row.len() != 7 {
            return Err(parse_error(origin, line, "ground-truth rows carry class and visibility together"));
        }
        out.push(MotRecord {
            frame,
            id,
            left: nums[0],
            top: nums[1],
            width: nums[2],
            height: nums[3],
            conf: nums[4],
            extra: nums[5..].to_vec(),
        });
    }
    Ok(out)
}

pub fn parse_mot_file(path: impl AsRef<Path>, kind: MotFileKind) -> Result<Vec<MotRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mot_str(&text, kind, path)
}

/// Serializes records in MOT layout, one row per record.
pub fn format_mot(records: &[MotRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            r.frame, r.id, r.left, r.top, r.width, r.height, r.conf
        );
        for v in &r.extra {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_mot_file(path: impl AsRef<Path>, records: &[MotRecord]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_mot(records)).map_err(|e| Error::io(path, e))
}

/// Greedy matching by descending IoU.
///
/// Returns, for each annotation, the index of its matched detection. Pairs
/// below `iou_threshold` are never matched and every detection is used at
/// most once. This is a simple stand-in for a proper detection–annotation
/// association technique.
pub fn associate_greedy_iou<T: Scalar>(
    annotations: &[BoundingBox<T>],
    detections: &[BoundingBox<T>],
    iou_threshold: T,
) -> Vec<Option<usize>> {
    let mut pairs = Vec::new();
    for (i, a) in annotations.iter().enumerate() {
        for (j, d) in detections.iter().enumerate() {
            let iou = a.iou(d);
            if iou >= iou_threshold && iou > T::zero() {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut matched = vec![None; annotations.len()];
    let mut used = vec![false; detections.len()];
    for (_, i, j) in pairs {
        if matched[i].is_none() && !used[j] {
            matched[i] = Some(j);
            used[j] = true;
        }
    }
    matched
}

/// Annotation rows kept at ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationFilter {
    /// MOT class ids to keep (1 = pedestrian).
    pub classes: Vec<i64>,
    /// Rows with visibility at or below this are dropped (0 drops fully occluded boxes).
    pub min_visibility: f64,
    /// Drop rows whose `conf` flag marks them as ignored.
    pub drop_ignored: bool,
}

impl Default for AnnotationFilter {
    fn default() -> Self {
        Self {
            classes: vec![1],
            min_visibility: 0.0,
            drop_ignored: true,
        }
    }
}

impl AnnotationFilter {
    pub fn accepts(&self, r: &MotRecord) -> bool {
        if self.drop_ignored && r.conf == 0.0 {
            return false;
        }
        if let Some(c) = r.class() {
            if !self.classes.contains(&c) {
                return false;
            }
        }
        match r.visibility() {
            Some(v) => v > self.min_visibility,
            None => true,
        }
    }
}

/// Image size and frame rate of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceInfo {
    pub name: String,
    pub image_width: f64,
    pub image_height: f64,
    pub frame_rate: f64,
}

/// Reads the `key=value` lines of a MOT `seqinfo.ini`.
pub fn parse_seqinfo(path: impl AsRef<Path>) -> Result<SequenceInfo> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = BTreeMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            values.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
    }
    let num = |key: &str| -> Result<f64> {
        values
            .get(key)
            .ok_or_else(|| parse_error(path, 0, format!("missing `{key}`")))?
            .parse()
            .map_err(|_| parse_error(path, 0, format!("`{key}` is not a number")))
    };
    Ok(SequenceInfo {
        name: values.get("name").cloned().unwrap_or_default(),
        image_width: num("imwidth")?,
        image_height: num("imheight")?,
        frame_rate: num("framerate")?,
    })
}

/// A MOT sequence directory: `seqinfo.ini`, `gt/gt.txt`, optional `det/det.txt`.
#[derive(Debug, Clone)]
pub struct MotSequence {
    pub dir: PathBuf,
    pub info: SequenceInfo,
    pub annotations: Vec<MotRecord>,
    pub detections: Option<Vec<MotRecord>>,
}

impl MotSequence {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "sequence directory not found"),
            ));
        }
        let info = parse_seqinfo(dir.join("seqinfo.ini"))?;
        let annotations = parse_mot_file(dir.join("gt").join("gt.txt"), MotFileKind::Annotation)?;
        let det_path = dir.join("det").join("det.txt");
        let detections = if det_path.exists() {
            Some(parse_mot_file(det_path, MotFileKind::Detection)?)
        } else {
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            info,
            annotations,
            detections,
        })
    }

    /// Object ids present after filtering, sorted.
    pub fn object_ids(&self, filter: &AnnotationFilter) -> Vec<i64> {
        let mut ids: Vec<i64> = self
            .annotations
            .iter()
            .filter(|r| filter.accepts(r))
            .map(|r| r.id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Extracts one object's track with detections associated frame by frame.
    pub fn track<T: Scalar>(
        &self,
        object_id: i64,
        filter: &AnnotationFilter,
        iou_threshold: T,
    ) -> Result<TrackSequence<T>> {
        build_track(
            &self.annotations,
            self.detections.as_deref(),
            object_id,
            filter,
            iou_threshold,
            (self.info.image_width, self.info.image_height),
            self.info.frame_rate,
        )
    }
}

/// Time series of one object: annotations, associated detections.
///
/// Frames are re-based so that the first annotated frame is `0`; gaps may
/// remain where annotations were filtered out.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSequence<T> {
    pub object_id: i64,
    /// Original index of frame `0`.
    pub first_frame: i64,
    pub frames: Vec<i64>,
    pub annotations: Vec<BoundingBox<T>>,
    pub detections: Vec<Option<BoundingBox<T>>>,
    pub image_size: (f64, f64),
    pub frame_rate: f64,
}

impl<T: Scalar> TrackSequence<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Detection availability per listed frame.
    pub fn detection_mask(&self) -> Vec<bool> {
        self.detections.iter().map(Option::is_some).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::EmptyTrack);
        }
        if self.annotations.len() != self.frames.len() || self.detections.len() != self.frames.len() {
            return Err(Error::FrameMisalignment(format!(
                "{} frames, {} annotations, {} detection slots",
                self.frames.len(),
                self.annotations.len(),
                self.detections.len()
            )));
        }
        if self.frames.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::FrameMisalignment("frames are not strictly increasing".into()));
        }
        Ok(())
    }
}

/// Builds a track for `object_id` from raw annotation and detection rows.
pub fn build_track<T: Scalar>(
    annotations: &[MotRecord],
    detections: Option<&[MotRecord]>,
    object_id: i64,
    filter: &AnnotationFilter,
    iou_threshold: T,
    image_size: (f64, f64),
    frame_rate: f64,
) -> Result<TrackSequence<T>> {
    let mut by_frame: BTreeMap<i64, Vec<&MotRecord>> = BTreeMap::new();
    for r in annotations.iter().filter(|r| filter.accepts(r)) {
        by_frame.entry(r.frame).or_default().push(r);
    }
    let mut dets_by_frame: BTreeMap<i64, Vec<BoundingBox<T>>> = BTreeMap::new();
    for d in detections.unwrap_or(&[]) {
        dets_by_frame.entry(d.frame).or_default().push(d.bbox());
    }

    let mut frames = Vec::new();
    let mut boxes = Vec::new();
    let mut assoc = Vec::new();
    for (frame, rows) in &by_frame {
        let Some(pos) = rows.iter().position(|r| r.id == object_id) else {
            continue;
        };
        let annots: Vec<BoundingBox<T>> = rows.iter().map(|r| r.bbox()).collect();
        let dets = dets_by_frame.get(frame).map(Vec::as_slice).unwrap_or(&[]);
        let matched = associate_greedy_iou(&annots, dets, iou_threshold);
        frames.push(*frame);
        boxes.push(annots[pos]);
        assoc.push(matched[pos].map(|j| dets[j]));
    }
    let first_frame = *frames.first().ok_or(Error::EmptyTrack)?;
    let track = TrackSequence {
        object_id,
        first_frame,
        frames: frames.iter().map(|f| f - first_frame).collect(),
        annotations: boxes,
        detections: assoc,
        image_size,
        frame_rate,
    };
    track.validate()?;
    Ok(track)
}

/// Pseudo-3D ground truth `[x, y, z, w, h]` (meters) for a 2D annotation and
/// a guessed metric height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiAnnotation3d<T: Scalar> {
    pub values: Vector5<T>,
    pub guessed_height_m: T,
}

impl<T: Scalar> SemiAnnotation3d<T> {
    pub fn to_vector(&self) -> DVector<T> {
        DVector::from_column_slice(self.values.as_slice())
    }

    /// The corresponding planar 3D box state with zero velocities.
    pub fn to_state(&self) -> DVector<T> {
        let v = &self.values;
        let z = T::zero();
        DVector::from_vec(vec![v[0], z, v[1], z, v[2], z, v[3], v[4]])
    }
}

pub fn semi_annotate_3d<T: Scalar>(
    a: &BoundingBox<T>,
    cam: &CameraIntrinsics<T>,
    guessed_height_m: T,
) -> Result<SemiAnnotation3d<T>> {
    if !(a.h > T::zero()) {
        return Err(Error::NonPositiveHeight {
            height: a.h.to_f64_lossy(),
        });
    }
    if !(guessed_height_m > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "guessed_height_m",
            reason: format!("must be > 0, got {guessed_height_m}"),
        });
    }
    let k = guessed_height_m / a.h;
    let pp = cam.principal_point_px();
    Ok(SemiAnnotation3d {
        values: Vector5::new(
            k * (a.x - pp.x),
            k * (a.y - pp.y),
            k * cam.focal_ratio(),
            k * a.w,
            k * a.h,
        ),
        guessed_height_m,
    })
}
