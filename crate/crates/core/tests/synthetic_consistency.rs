//! Consistency of the three filters on a synthetic pedestrian whose 3D
//! motion follows the 3D planar box model exactly, observed through 200
//! trials of simulated detections. Without model mismatch the 3D filter
//! should be consistent, the 2D model filter optimistic and the
//! bag-of-tricks filter pessimistic.

mod common;

use monotrack::sim::{simulate_detections, SimConfig};
use monotrack::tracker::{evaluate_runs, run_trials, FilterKind};

struct Medians {
    rmse: f64,
    anees: f64,
}

fn medians() -> Vec<(FilterKind, Medians)> {
    let setup = common::default_setup();
    let boxes = common::model_matched_boxes(&setup, [-1.0, 1.0, 1.2, 0.0, 8.0, -0.3, 0.85, 1.65], 300, 3);
    let track = common::annotation_track(boxes);
    let trials = simulate_detections(&track, &SimConfig::new(200, 7)).unwrap();
    FilterKind::ALL
        .into_iter()
        .map(|kind| {
            let runs = run_trials(kind, &setup, &track.frames, &trials).unwrap();
            assert!(runs.iter().all(|r| r.failure.is_none()), "{kind} failed on a trial");
            let (eval, _) = evaluate_runs(&track, &runs, &setup, 1.65).unwrap();
            assert_eq!(eval.coverage(), track.len());
            let m = Medians {
                rmse: eval.rmse.median().unwrap(),
                anees: eval.anees.median().unwrap(),
            };
            (kind, m)
        })
        .collect()
}

#[test]
fn anees_and_rmse_ordering_on_model_matched_track() {
    let results = medians();
    let get = |k: FilterKind| &results.iter().find(|(kind, _)| *kind == k).unwrap().1;
    let (kf, bot, ukf) = (get(FilterKind::Kf2d), get(FilterKind::Bot), get(FilterKind::Ukf3d));
    for (kind, m) in &results {
        println!("{kind}: median rmse {:.3} px, median anees {:.3}", m.rmse, m.anees);
    }
    assert!((0.80..=1.25).contains(&ukf.anees), "ukf3d anees {}", ukf.anees);
    assert!(kf.anees > ukf.anees && ukf.anees > bot.anees);
    assert!(ukf.rmse <= kf.rmse);
}
