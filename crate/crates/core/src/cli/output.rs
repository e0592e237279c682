//! CSV writers for per-frame estimates.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::filters::{GaussianEstimate, StateSpace};
use crate::tracker::FilterRun;

fn state_names(space: StateSpace, dim: usize) -> Vec<String> {
    let names: &[&str] = match space {
        StateSpace::Box2d => &["x", "vx", "y", "vy", "w", "vw", "h", "vh"],
        StateSpace::BoxBot => &["x", "dx", "y", "dy", "w", "dw", "h", "dh"],
        StateSpace::Planar3d => &["x", "vx", "y", "vy", "z", "vz", "w", "h"],
        StateSpace::BoundingBox => &["x", "y", "w", "h"],
        StateSpace::Generic => &[],
    };
    if names.len() == dim {
        names.iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(|i| format!("s{i}")).collect()
    }
}

/// Which view of a run to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateView {
    Native,
    BoundingBox,
}

/// Writes one row per frame with an estimate: original frame, track-relative
/// frame, whether a detection was used, the mean, the variances and
/// optionally the row-major upper triangle of the covariance.
///
/// Rows stop at the first covariance that is not symmetric PSD; the frame
/// of that estimate is returned.
pub fn write_estimates(
    path: &Path,
    run: &FilterRun<f64>,
    view: EstimateView,
    first_frame: i64,
    full_covariance: bool,
) -> Result<Option<i64>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let pick = |est: &crate::tracker::StepOutput<f64>| -> GaussianEstimate<f64> {
        match view {
            EstimateView::Native => est.native.clone(),
            EstimateView::BoundingBox => est.bbox.clone(),
        }
    };
    let Some(first) = run.steps.iter().flatten().next().map(pick) else {
        writeln!(w, "frame,k,updated").map_err(io)?;
        return w.flush().map_err(io).map(|_| None);
    };
    let names = state_names(first.space, first.dim());
    let mut header = vec!["frame".to_string(), "k".into(), "updated".into()];
    header.extend(names.iter().map(|n| format!("mean_{n}")));
    header.extend(names.iter().map(|n| format!("var_{n}")));
    if full_covariance {
        for i in 0..names.len() {
            for j in i..names.len() {
                header.push(format!("cov_{}_{}", names[i], names[j]));
            }
        }
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;

    let mut invalid = None;
    for (k, step) in run.frames.iter().zip(&run.steps) {
        let Some(step) = step else { continue };
        let est = pick(step);
        if !est.is_valid() {
            invalid = Some(first_frame + k);
            break;
        }
        let mut row = vec![(first_frame + k).to_string(), k.to_string(), u8::from(step.updated).to_string()];
        row.extend(est.mean.iter().map(f64::to_string));
        row.extend(est.cov.diagonal().iter().map(f64::to_string));
        if full_covariance {
            let n = est.dim();
            for i in 0..n {
                for j in i..n {
                    row.push(est.cov[(i, j)].to_string());
                }
            }
        }
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(invalid)
}
