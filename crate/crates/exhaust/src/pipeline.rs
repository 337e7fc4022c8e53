//! Per-frame orchestration of the two detection stages.
//!
//! For every frame: estimate the ground and derive the working cloud,
//! find exhaust near vehicle rears (stage one), remember the detected
//! clouds, then recover remembered-but-isolated clouds through the
//! likelihood grid (stage two). Final per-point labels combine both
//! stages. Detector boxes above a confidence threshold can additionally
//! be audited for being "ghosts" — predictions hallucinated onto an
//! exhaust cloud rather than a real object.

use std::time::{Duration, Instant};

use crate::clustering::{cluster, summarize, GasCluster};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::ground::{estimate_ground, filter_cloud};
use crate::memory::{build_grid, DetectionHistory, DetectionSource, LikelihoodGrid};
use crate::proximity::{detect_proximity, label_correction, pillarize};
use crate::scan::{BoundingBox3D, Pose, Scan, SemanticLabel};

/// Everything the pipeline needs for one frame.
#[derive(Debug, Clone)]
pub struct FrameInput {
    pub scan: Scan,
    pub boxes: Vec<BoundingBox3D>,
    pub pose: Option<Pose>,
    /// External road mask (true = road); when absent the ground filter
    /// classifies the road itself.
    pub road_mask: Option<Vec<bool>>,
}

/// Diagnostic counts for one processed frame.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrameCounts {
    pub points: usize,
    pub road_points: usize,
    pub working_points: usize,
    pub proximity_gas: usize,
    pub isolated_candidates: usize,
    pub isolated_gas: usize,
    pub history_len: usize,
}

/// Ghost verdict for one detector box.
#[derive(Debug, Clone, Copy)]
pub struct GhostFlag {
    /// Index into the frame's box list.
    pub box_index: usize,
    pub confidence: f64,
    pub points_inside: usize,
    pub gas_inside: usize,
    pub is_ghost: bool,
}

/// Output of the pipeline for one frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    /// Final label per scan point.
    pub labels: Vec<SemanticLabel>,
    /// Scan indices labeled by the proximity stage, ascending.
    pub proximity: Vec<usize>,
    /// Scan indices labeled by the isolated-cloud stage, ascending (may
    /// overlap `proximity`).
    pub isolated: Vec<usize>,
    /// Ghost verdicts for confidence-carrying boxes, in box order.
    pub ghosts: Vec<GhostFlag>,
    /// The likelihood grid used this frame, when stage two ran.
    pub grid: Option<LikelihoodGrid>,
    pub counts: FrameCounts,
}

/// Cluster a set of labeled scan points and summarize each cluster.
fn summarize_gas_points(scan: &Scan, indices: &[usize], cfg: &PipelineConfig) -> Vec<GasCluster> {
    if indices.is_empty() {
        return Vec::new();
    }
    let positions: Vec<[f64; 3]> = indices.iter().map(|&i| scan.points[i].pos()).collect();
    cluster(&positions, cfg.cluster_eps_m, cfg.cluster_min_pts)
        .iter()
        .map(|members| summarize(&positions, members, cfg.sigma_min_m))
        .collect()
}

/// Run both detection stages on one frame, updating the history.
///
/// Frames must arrive with strictly increasing `scan.t`. Detector boxes
/// (those carrying a confidence) are enlarged by the configured margin
/// before any use; ground-truth boxes are used as-is.
pub fn process_frame(
    scan: &Scan,
    boxes: &[BoundingBox3D],
    pose: Option<&Pose>,
    road_mask: Option<&[bool]>,
    state: &mut DetectionHistory,
    cfg: &PipelineConfig,
) -> Result<FrameResult> {
    if let Some(prev) = state.last_frame {
        if scan.t <= prev {
            return Err(Error::NonMonotonicTime { prev, next: scan.t });
        }
    }
    state.last_frame = Some(scan.t);

    if let Some(mask) = road_mask {
        if mask.len() != scan.points.len() {
            return Err(Error::LabelLength {
                expected: scan.points.len(),
                got: mask.len(),
            });
        }
    }

    // Detector output gets a safety margin; label boxes are trusted.
    let boxes: Vec<BoundingBox3D> = boxes
        .iter()
        .map(|b| {
            if b.confidence.is_some() && cfg.box_margin_m > 0.0 {
                b.enlarged(cfg.box_margin_m)
            } else {
                b.clone()
            }
        })
        .collect();

    let (ground, estimated_mask) = estimate_ground(scan, cfg.ground_cell_m, cfg.ground_tol_m);
    let road: Vec<bool> = match road_mask {
        Some(mask) => mask.to_vec(),
        None => estimated_mask,
    };

    let exclusion: &[BoundingBox3D] = if cfg.exclude_box_points { &boxes } else { &[] };
    let cloud = filter_cloud(scan, exclusion, &road);

    // Stage one: exhaust near vehicle rears.
    let proximity = detect_proximity(&cloud, &boxes, &ground, cfg);
    let clusters = summarize_gas_points(scan, &proximity.gas_indices, cfg);
    state.insert(&clusters, scan.t, pose, DetectionSource::Proximity);
    state.prune(scan.t);

    // Stage two: remembered clouds without a nearby emitter.
    let mut grid = None;
    let mut isolated_candidates = 0usize;
    let mut isolated: Vec<usize> = Vec::new();
    if cfg.isolated_stage_enabled {
        let g = build_grid(state, cfg.grid_extent_m, cfg.grid_dx_m, cfg.grid_dy_m, pose)?;
        let candidates: Vec<usize> = cloud
            .iter()
            .filter(|(_, p)| g.query(p) > 0.0)
            .map(|(i, _)| i)
            .collect();
        isolated_candidates = candidates.len();
        isolated = if cfg.label_correction_enabled {
            let pillar_grid =
                pillarize(scan, &candidates, cfg.pillar_dx_m, cfg.pillar_dy_m, &ground);
            label_correction(
                &pillar_grid,
                cfg.reflectivity_threshold(),
                cfg.ground_clearance_min_m,
            )
        } else {
            candidates
        };
        if cfg.second_stage_memory_save_enabled {
            let clusters = summarize_gas_points(scan, &isolated, cfg);
            state.insert(&clusters, scan.t, pose, DetectionSource::Isolated);
        }
        grid = Some(g);
    }

    // Final labels: road, then exhaust from either stage, everything else
    // is other. Both stages only ever label working-cloud points, so no
    // road or excluded-box point can end up as gas.
    let mut labels = vec![SemanticLabel::Other; scan.points.len()];
    for (i, &is_road) in road.iter().enumerate() {
        if is_road {
            labels[i] = SemanticLabel::Road;
        }
    }
    for &i in proximity.gas_indices.iter().chain(isolated.iter()) {
        labels[i] = SemanticLabel::Gas;
    }

    let ghosts = detect_ghosts(&boxes, &labels, scan, cfg);

    let counts = FrameCounts {
        points: scan.points.len(),
        road_points: road.iter().filter(|&&r| r).count(),
        working_points: cloud.len(),
        proximity_gas: proximity.gas_indices.len(),
        isolated_candidates,
        isolated_gas: isolated.len(),
        history_len: state.len(),
    };

    Ok(FrameResult {
        labels,
        proximity: proximity.gas_indices,
        isolated,
        ghosts,
        grid,
        counts,
    })
}

/// Flag detector boxes that sit on exhaust rather than on an object.
///
/// Only boxes with a confidence above `cfg.ghost_conf_thresh` are judged;
/// a box is a ghost when strictly more than half of the scan points inside
/// it carry the gas label. Boxes without points are never ghosts, and
/// boxes without a confidence (ground truth) are skipped entirely.
pub fn detect_ghosts(
    boxes: &[BoundingBox3D],
    labels: &[SemanticLabel],
    scan: &Scan,
    cfg: &PipelineConfig,
) -> Vec<GhostFlag> {
    debug_assert_eq!(labels.len(), scan.points.len());
    boxes
        .iter()
        .enumerate()
        .filter_map(|(box_index, b)| {
            let confidence = b.confidence?;
            let mut points_inside = 0usize;
            let mut gas_inside = 0usize;
            for (p, &label) in scan.points.iter().zip(labels) {
                if b.contains(p) {
                    points_inside += 1;
                    if label == SemanticLabel::Gas {
                        gas_inside += 1;
                    }
                }
            }
            let is_ghost = confidence > cfg.ghost_conf_thresh
                && points_inside > 0
                && 2 * gas_inside > points_inside;
            Some(GhostFlag {
                box_index,
                confidence,
                points_inside,
                gas_inside,
                is_ghost,
            })
        })
        .collect()
}

/// Totals over one processed sequence.
#[derive(Debug, Clone, Default)]
pub struct SequenceSummary {
    pub frames: u32,
    pub points: u64,
    pub gas_points: u64,
    pub ghost_flags: u64,
    pub elapsed: Duration,
}

/// Process a sequence of frames against a fresh history, feeding each
/// result to `sink` (label writers, metric accumulators, ...).
pub fn run_sequence<I, F>(frames: I, cfg: &PipelineConfig, mut sink: F) -> Result<SequenceSummary>
where
    I: IntoIterator<Item = Result<FrameInput>>,
    F: FnMut(&FrameInput, &FrameResult) -> Result<()>,
{
    cfg.validate()?;
    let mut history = DetectionHistory::new(cfg.history_ttl_steps);
    let mut summary = SequenceSummary::default();
    let start = Instant::now();
    for frame in frames {
        let input = frame?;
        let result = process_frame(
            &input.scan,
            &input.boxes,
            input.pose.as_ref(),
            input.road_mask.as_deref(),
            &mut history,
            cfg,
        )?;
        summary.frames += 1;
        summary.points += input.scan.points.len() as u64;
        summary.gas_points += result
            .labels
            .iter()
            .filter(|&&l| l == SemanticLabel::Gas)
            .count() as u64;
        summary.ghost_flags += result.ghosts.iter().filter(|g| g.is_ghost).count() as u64;
        log::debug!(
            "frame {}: {} pts, {} road, {} working, {} gas ({} isolated), history {}",
            input.scan.t,
            result.counts.points,
            result.counts.road_points,
            result.counts.working_points,
            result.counts.proximity_gas + result.counts.isolated_gas,
            result.counts.isolated_gas,
            result.counts.history_len,
        );
        sink(&input, &result)?;
    }
    summary.elapsed = start.elapsed();
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::scan::{BoxClass, Point};

    /// A car at `center` with a plume hanging behind its rear face, over a
    /// ground plane. Returns the scan plus the index range of the plume.
    fn scene(
        t: u32,
        car_center: [f64; 3],
        plume_center: Option<[f64; 2]>,
        seed: u64,
    ) -> (Scan, Vec<BoundingBox3D>, std::ops::Range<usize>) {
        let mut rng = CounterRng::keyed(seed, &[t as u64]);
        let mut points = Vec::new();
        // Ground plane covering the scene.
        for i in 0..60 {
            for j in 0..24 {
                points.push(Point::new(
                    -5.0 + 0.5 * i as f32,
                    -6.0 + 0.5 * j as f32,
                    0.0,
                    0.3,
                ));
            }
        }
        let plume_start = points.len();
        if let Some(pc) = plume_center {
            for _ in 0..150 {
                points.push(Point::new(
                    (pc[0] + rng.range(-0.4, 0.4)) as f32,
                    (pc[1] + rng.range(-0.4, 0.4)) as f32,
                    rng.range(0.3, 1.1) as f32,
                    rng.range(0.0, 0.008) as f32,
                ));
            }
        }
        let plume = plume_start..points.len();
        let car = BoundingBox3D::new(car_center, 4.2, 1.9, 1.6, 0.0, BoxClass::Vehicle, None);
        (
            Scan {
                t,
                points,
                gt_labels: None,
            },
            vec![car],
            plume,
        )
    }

    #[test]
    fn first_frame_detects_the_plume_and_remembers_it() {
        let cfg = PipelineConfig::default();
        let mut history = DetectionHistory::new(cfg.history_ttl_steps);
        // Back point (5.9, 0, 1); plume centered 0.6 m behind it.
        let (scan, boxes, plume) = scene(0, [8.0, 0.0, 1.0], Some([5.3, 0.0]), 1);
        let result = process_frame(&scan, &boxes, None, None, &mut history, &cfg).unwrap();
        assert!(!result.proximity.is_empty());
        for i in plume {
            assert_eq!(result.labels[i], SemanticLabel::Gas, "plume point {i}");
        }
        assert!(!history.is_empty());
        assert!(history.iter().all(
            |d| d.source == DetectionSource::Proximity || d.source == DetectionSource::Isolated
        ));
    }

    #[test]
    fn trail_is_recovered_after_the_vehicle_moves_away() {
        let cfg = PipelineConfig::default();
        let mut history = DetectionHistory::new(cfg.history_ttl_steps);
        let (scan0, boxes0, _) = scene(0, [8.0, 0.0, 1.0], Some([5.3, 0.0]), 2);
        process_frame(&scan0, &boxes0, None, None, &mut history, &cfg).unwrap();

        // Ten frames later the car is 12 m ahead; the cloud has not moved.
        let (scan1, _, plume1) = scene(10, [20.0, 0.0, 1.0], Some([5.3, 0.0]), 2);
        let boxes1 = vec![BoundingBox3D::new(
            [20.0, 0.0, 1.0],
            4.2,
            1.9,
            1.6,
            0.0,
            BoxClass::Vehicle,
            None,
        )];
        let result = process_frame(&scan1, &boxes1, None, None, &mut history, &cfg).unwrap();
        // The rear sphere sits at (17.9, 0): nothing there.
        assert!(result.proximity.is_empty());
        // The remembered footprint recovers nearly all of the old cloud.
        let recovered = plume1
            .clone()
            .filter(|&i| result.labels[i] == SemanticLabel::Gas)
            .count();
        let total = plume1.len();
        assert!(
            recovered as f64 >= 0.9 * total as f64,
            "recovered {recovered}/{total}"
        );
    }

    #[test]
    fn empty_scene_produces_no_gas_and_no_memory() {
        let cfg = PipelineConfig::default();
        let mut history = DetectionHistory::new(cfg.history_ttl_steps);
        let (scan, boxes, _) = scene(0, [8.0, 0.0, 1.0], None, 3);
        let result = process_frame(&scan, &boxes, None, None, &mut history, &cfg).unwrap();
        assert!(result.proximity.is_empty());
        assert!(result.isolated.is_empty());
        assert!(history.is_empty());
        assert!(result
            .labels
            .iter()
            .all(|&l| l == SemanticLabel::Road || l == SemanticLabel::Other));
    }

    #[test]
    fn non_monotonic_frames_are_rejected() {
        let cfg = PipelineConfig::default();
        let mut history = DetectionHistory::new(cfg.history_ttl_steps);
        let (scan, boxes, _) = scene(5, [8.0, 0.0, 1.0], None, 4);
        process_frame(&scan, &boxes, None, None, &mut history, &cfg).unwrap();
        let (scan_same, ..) = scene(5, [8.0, 0.0, 1.0], None, 4);
        assert!(matches!(
            process_frame(&scan_same, &boxes, None, None, &mut history, &cfg),
            Err(Error::NonMonotonicTime { prev: 5, next: 5 })
        ));
        let (scan_back, ..) = scene(3, [8.0, 0.0, 1.0], None, 4);
        assert!(matches!(
            process_frame(&scan_back, &boxes, None, None, &mut history, &cfg),
            Err(Error::NonMonotonicTime { prev: 5, next: 3 })
        ));
    }

    #[test]
    fn ghost_rule_requires_confidence_and_strict_majority() {
        let cfg = PipelineConfig::default();
        let scan = Scan {
            t: 0,
            points: (0..10)
                .map(|i| Point::new(i as f32 * 0.1, 0.0, 0.0, 0.0))
                .collect(),
            gt_labels: None,
        };
        let cover = |conf: Option<f64>| {
            BoundingBox3D::new([0.5, 0.0, 0.0], 2.0, 2.0, 2.0, 0.0, BoxClass::Vehicle, conf)
        };
        let labels = |gas: usize| -> Vec<SemanticLabel> {
            (0..10)
                .map(|i| {
                    if i < gas {
                        SemanticLabel::Gas
                    } else {
                        SemanticLabel::Other
                    }
                })
                .collect()
        };

        // 6 of 10 gas: strict majority, flagged.
        let flags = detect_ghosts(&[cover(Some(0.95))], &labels(6), &scan, &cfg);
        assert_eq!(flags.len(), 1);
        assert!(flags[0].is_ghost);
        assert_eq!((flags[0].points_inside, flags[0].gas_inside), (10, 6));

        // 5 of 10: no strict majority.
        let flags = detect_ghosts(&[cover(Some(0.95))], &labels(5), &scan, &cfg);
        assert!(!flags[0].is_ghost);

        // Confidence at or below the threshold is not judged as ghost.
        let flags = detect_ghosts(&[cover(Some(0.8))], &labels(10), &scan, &cfg);
        assert!(!flags[0].is_ghost);

        // Ground-truth boxes are skipped entirely.
        let flags = detect_ghosts(&[cover(None)], &labels(10), &scan, &cfg);
        assert!(flags.is_empty());

        // An empty box is never a ghost.
        let far = BoundingBox3D::new(
            [50.0, 0.0, 0.0],
            1.0,
            1.0,
            1.0,
            0.0,
            BoxClass::Vehicle,
            Some(0.99),
        );
        let flags = detect_ghosts(&[far], &labels(10), &scan, &cfg);
        assert!(!flags[0].is_ghost);
        assert_eq!(flags[0].points_inside, 0);
    }

    #[test]
    fn frame_processing_is_deterministic() {
        let cfg = PipelineConfig::default();
        let (scan, boxes, _) = scene(0, [8.0, 0.0, 1.0], Some([5.3, 0.0]), 6);
        let mut h1 = DetectionHistory::new(cfg.history_ttl_steps);
        let mut h2 = DetectionHistory::new(cfg.history_ttl_steps);
        let a = process_frame(&scan, &boxes, None, None, &mut h1, &cfg).unwrap();
        let b = process_frame(&scan, &boxes, None, None, &mut h2, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.proximity, b.proximity);
        assert_eq!(a.isolated, b.isolated);
    }

    #[test]
    fn disabling_the_isolated_stage_shrinks_the_gas_set() {
        let full_cfg = PipelineConfig::default();
        let reduced_cfg = PipelineConfig {
            isolated_stage_enabled: false,
            ..PipelineConfig::default()
        };

        let mut h_full = DetectionHistory::new(full_cfg.history_ttl_steps);
        let mut h_reduced = DetectionHistory::new(reduced_cfg.history_ttl_steps);
        for t in 0..3u32 {
            let (scan, boxes, _) = scene(t, [8.0, 0.0, 1.0], Some([5.3, 0.0]), 7);
            let full = process_frame(&scan, &boxes, None, None, &mut h_full, &full_cfg).unwrap();
            let reduced =
                process_frame(&scan, &boxes, None, None, &mut h_reduced, &reduced_cfg).unwrap();
            for (i, (&f, &r)) in full.labels.iter().zip(&reduced.labels).enumerate() {
                if r == SemanticLabel::Gas {
                    assert_eq!(f, SemanticLabel::Gas, "frame {t} point {i}");
                }
            }
            assert!(reduced.isolated.is_empty());
            assert!(reduced.grid.is_none());
        }
    }

    #[test]
    fn disabling_memory_save_keeps_history_proximity_only() {
        let cfg = PipelineConfig {
            second_stage_memory_save_enabled: false,
            ..PipelineConfig::default()
        };
        let mut history = DetectionHistory::new(cfg.history_ttl_steps);
        for t in 0..3u32 {
            let (scan, boxes, _) = scene(t, [8.0, 0.0, 1.0], Some([5.3, 0.0]), 8);
            process_frame(&scan, &boxes, None, None, &mut history, &cfg).unwrap();
        }
        assert!(!history.is_empty());
        assert!(history
            .iter()
            .all(|d| d.source == DetectionSource::Proximity));
    }

    #[test]
    fn road_and_excluded_box_points_are_never_gas() {
        let cfg = PipelineConfig::default();
        let mut history = DetectionHistory::new(cfg.history_ttl_steps);
        for t in 0..3u32 {
            let (scan, boxes, _) = scene(t, [8.0, 0.0, 1.0], Some([5.3, 0.0]), 9);
            let result = process_frame(&scan, &boxes, None, None, &mut history, &cfg).unwrap();
            let (_, road) = estimate_ground(&scan, cfg.ground_cell_m, cfg.ground_tol_m);
            for (i, p) in scan.points.iter().enumerate() {
                if road[i] || boxes.iter().any(|b| b.contains(p)) {
                    assert_ne!(result.labels[i], SemanticLabel::Gas, "frame {t} point {i}");
                }
            }
        }
    }

    #[test]
    fn external_road_mask_overrides_the_estimate() {
        let cfg = PipelineConfig::default();
        let mut history = DetectionHistory::new(cfg.history_ttl_steps);
        let (scan, boxes, _) = scene(0, [8.0, 0.0, 1.0], None, 10);
        // Mark everything as road: nothing is left to classify.
        let mask = vec![true; scan.points.len()];
        let result = process_frame(&scan, &boxes, None, Some(&mask), &mut history, &cfg).unwrap();
        assert!(result.labels.iter().all(|&l| l == SemanticLabel::Road));
        assert_eq!(result.counts.working_points, 0);

        // Wrong length is rejected.
        let mut h2 = DetectionHistory::new(cfg.history_ttl_steps);
        let bad = vec![true; 3];
        assert!(matches!(
            process_frame(&scan, &boxes, None, Some(&bad), &mut h2, &cfg),
            Err(Error::LabelLength { .. })
        ));
    }

    #[test]
    fn sequence_runner_feeds_frames_through_one_history() {
        let cfg = PipelineConfig::default();
        let frames: Vec<Result<FrameInput>> = (0..4u32)
            .map(|t| {
                let (scan, boxes, _) = scene(t, [8.0, 0.0, 1.0], Some([5.3, 0.0]), 11);
                Ok(FrameInput {
                    scan,
                    boxes,
                    pose: None,
                    road_mask: None,
                })
            })
            .collect();
        let mut seen = 0u32;
        let summary = run_sequence(frames, &cfg, |input, result| {
            assert_eq!(input.scan.t, seen);
            assert_eq!(result.labels.len(), input.scan.points.len());
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.frames, 4);
        assert_eq!(seen, 4);
        assert!(summary.gas_points > 0);

        // An empty sequence gives an empty summary.
        let empty = run_sequence(Vec::new(), &cfg, |_, _| Ok(())).unwrap();
        assert_eq!(empty.frames, 0);
        assert_eq!(empty.points, 0);
    }

    #[test]
    fn splitting_a_sequence_loses_only_carried_over_memory() {
        let cfg = PipelineConfig::default();
        let make_frame = |t: u32| {
            // The car drives off after frame 2, leaving the cloud behind.
            let car_x = if t <= 2 {
                8.0
            } else {
                8.0 + 3.0 * (t - 2) as f64
            };
            let (scan, boxes, _) = scene(t, [car_x, 0.0, 1.0], Some([5.3, 0.0]), 12);
            (scan, boxes)
        };

        // Full run over frames 0..6.
        let mut h_full = DetectionHistory::new(cfg.history_ttl_steps);
        let full: Vec<FrameResult> = (0..6u32)
            .map(|t| {
                let (scan, boxes) = make_frame(t);
                process_frame(&scan, &boxes, None, None, &mut h_full, &cfg).unwrap()
            })
            .collect();

        // Split run: fresh history for frames 3..6.
        let mut h_head = DetectionHistory::new(cfg.history_ttl_steps);
        let head: Vec<FrameResult> = (0..3u32)
            .map(|t| {
                let (scan, boxes) = make_frame(t);
                process_frame(&scan, &boxes, None, None, &mut h_head, &cfg).unwrap()
            })
            .collect();
        let mut h_tail = DetectionHistory::new(cfg.history_ttl_steps);
        let tail: Vec<FrameResult> = (3..6u32)
            .map(|t| {
                let (scan, boxes) = make_frame(t);
                process_frame(&scan, &boxes, None, None, &mut h_tail, &cfg).unwrap()
            })
            .collect();

        // The head half is identical to the full run.
        for (t, (f, s)) in full.iter().zip(&head).enumerate() {
            assert_eq!(f.labels, s.labels, "frame {t}");
        }
        // In the tail, the split run can only miss gas (no carried-over
        // memory), never invent it — and it does miss some.
        let mut lost = 0usize;
        for (k, s) in tail.iter().enumerate() {
            let f = &full[3 + k];
            for (i, (&fl, &sl)) in f.labels.iter().zip(&s.labels).enumerate() {
                if sl == SemanticLabel::Gas {
                    assert_eq!(fl, SemanticLabel::Gas, "tail frame {k} point {i}");
                }
                if fl == SemanticLabel::Gas && sl != SemanticLabel::Gas {
                    lost += 1;
                }
            }
        }
        assert!(lost > 0, "carried-over memory must matter in this scene");
    }
}
