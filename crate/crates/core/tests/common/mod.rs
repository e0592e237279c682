#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use monotrack::camera::CameraIntrinsics;
use monotrack::dataio::{BoundingBox, TrackSequence};
use monotrack::tracker::{TrackerParams, TrackerSetup};
use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const WIDTH: f64 = 1920.0;
pub const HEIGHT: f64 = 1080.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * normal(rng))
}

/// Random symmetric positive definite matrix with a spread of eigenvalues.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = random_matrix(rng, n, n);
    let floor: f64 = rng.random_range(0.01..1.0);
    &a * a.transpose() + DMatrix::identity(n, n) * floor
}

pub fn default_setup() -> TrackerSetup<f64> {
    let cam = CameraIntrinsics::new(1e-3, 1e-6, Vector2::new(WIDTH / 2.0, HEIGHT / 2.0)).unwrap();
    TrackerSetup::new(1.0 / 30.0, HEIGHT, cam, &TrackerParams::default()).unwrap()
}

/// Box sequence of a pedestrian whose 3D state evolves exactly by the 3D
/// planar box model, started at `x0`.
pub fn model_matched_boxes(setup: &TrackerSetup<f64>, x0: [f64; 8], n: usize, seed: u64) -> Vec<BoundingBox<f64>> {
    let m = &setup.model3d;
    let l = m.q.clone().cholesky().unwrap().l();
    let mut rng = rng(seed);
    let mut x = DVector::from_row_slice(&x0);
    let mut boxes = Vec::with_capacity(n);
    for _ in 0..n {
        let b = m.measure(&x).unwrap();
        boxes.push(BoundingBox::new(b[0], b[1], b[2], b[3]));
        let w = DVector::from_fn(8, |_, _| normal(&mut rng));
        x = &m.f * &x + &m.m + &l * w;
    }
    boxes
}

pub fn annotation_track(boxes: Vec<BoundingBox<f64>>) -> TrackSequence<f64> {
    let n = boxes.len();
    TrackSequence {
        object_id: 1,
        first_frame: 1,
        frames: (0..n as i64).collect(),
        detections: vec![None; n],
        annotations: boxes,
        image_size: (WIDTH, HEIGHT),
        frame_rate: 30.0,
    }
}

fn push_row(s: &mut String, frame: i64, id: i64, b: &BoundingBox<f64>, tail: &str) {
    let (l, t, w, h) = b.to_top_left();
    let _ = writeln!(s, "{frame},{id},{l:.2},{t:.2},{w:.2},{h:.2},{tail}");
}

/// Writes a small MOT-style sequence with two walking pedestrians (ids 1
/// and 2), a parked car (class 3) and a fully occluded pedestrian row.
/// Detections are the annotations plus pixel noise, with some frames missed
/// and one spurious detection per frame.
pub fn write_fixture_sequence(root: &Path, frames: usize) -> PathBuf {
    let dir = root.join("FIXTURE-01");
    fs::create_dir_all(dir.join("gt")).unwrap();
    fs::create_dir_all(dir.join("det")).unwrap();
    fs::write(
        dir.join("seqinfo.ini"),
        "[Sequence]\nname=FIXTURE-01\nimDir=img1\nframeRate=30\nseqLength=60\nimWidth=1920\nimHeight=1080\nimExt=.jpg\n",
    )
    .unwrap();
    let setup = default_setup();
    let walkers = [
        model_matched_boxes(&setup, [-1.5, 1.0, 1.2, 0.0, 9.0, -0.2, 0.85, 1.65], frames, 21),
        model_matched_boxes(&setup, [2.0, -0.8, 1.1, 0.0, 12.0, 0.3, 0.8, 1.75], frames, 22),
    ];
    let car = BoundingBox::new(300.0, 900.0, 400.0, 250.0);
    let mut gt = String::new();
    let mut det = String::new();
    let mut noise = rng(5);
    for k in 0..frames {
        let frame = k as i64 + 1;
        for (i, boxes) in walkers.iter().enumerate() {
            let id = i as i64 + 1;
            push_row(&mut gt, frame, id, &boxes[k], "1,1,0.9");
            let missed = (k + 3 * i) % 11 == 5;
            if !missed {
                let b = boxes[k];
                let jitter = |s: f64, r: &mut ChaCha8Rng| s * normal(r);
                let d = BoundingBox::new(
                    b.x + jitter(3.0, &mut noise),
                    b.y + jitter(3.0, &mut noise),
                    b.w + jitter(2.0, &mut noise),
                    b.h + jitter(4.0, &mut noise),
                );
                push_row(&mut det, frame, -1, &d, "0.95,-1,-1,-1");
            }
        }
        push_row(&mut gt, frame, 7, &car, "0,3,1");
        push_row(&mut gt, frame, 8, &BoundingBox::new(1500.0, 700.0, 60.0, 150.0), "1,1,0");
        push_row(&mut det, frame, -1, &BoundingBox::new(1700.0, 300.0, 50.0, 120.0), "0.4,-1,-1,-1");
    }
    fs::write(dir.join("gt").join("gt.txt"), gt).unwrap();
    fs::write(dir.join("det").join("det.txt"), det).unwrap();
    dir
}

/// Locates a MOT17 training sequence whose name starts with `name` under
/// the directory given by `MOT17_DIR` (either the dataset root or its
/// `train` folder).
pub fn mot17_sequence(name: &str) -> Option<PathBuf> {
    let root = PathBuf::from(std::env::var_os("MOT17_DIR")?);
    for base in [root.join("train"), root.clone()] {
        let Ok(entries) = fs::read_dir(&base) else { continue };
        let mut hits: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(name))
                    && p.join("gt").join("gt.txt").exists()
            })
            .collect();
        hits.sort();
        // Prefer the Faster R-CNN detection set.
        if let Some(p) = hits.iter().find(|p| p.to_string_lossy().ends_with("FRCNN")) {
            return Some(p.clone());
        }
        if let Some(p) = hits.into_iter().next() {
            return Some(p);
        }
    }
    None
}
