//! First detection stage: exhaust near the emitting vehicle.
//!
//! Candidate points are collected with a Euclidean ball query around the
//! rear-face midpoint of every vehicle box. Because a fixed sphere also
//! sweeps up pedestrians, poles and other structures behind vehicles, the
//! candidates are then corrected on a fine 2D pillar grid: a pillar keeps
//! its exhaust label only if its mean reflectivity is below a threshold
//! (condensed exhaust is a weak diffuse reflector) and it floats above the
//! ground (real obstacles touch it).

use std::collections::HashMap;

use crate::config::PipelineConfig;
use crate::ground::{FilteredCloud, GroundModel};
use crate::scan::{BoundingBox3D, BoxClass, Scan};

/// Indices of cloud points within `radius` of any query point.
///
/// Distances are full 3D Euclidean and the boundary is inclusive. The
/// result is ascending and duplicate-free even when spheres overlap.
pub fn sphere_candidates(
    cloud: &FilteredCloud,
    back_points: &[[f64; 3]],
    radius: f64,
) -> Vec<usize> {
    let r2 = radius * radius;
    cloud
        .iter()
        .filter(|(_, p)| {
            let pos = p.pos();
            back_points.iter().any(|q| {
                let dx = pos[0] - q[0];
                let dy = pos[1] - q[1];
                let dz = pos[2] - q[2];
                dx * dx + dy * dy + dz * dz <= r2
            })
        })
        .map(|(i, _)| i)
        .collect()
}

/// Aggregate statistics of one pillar (a vertical column of candidates).
#[derive(Debug, Clone)]
pub struct Pillar {
    /// Scan indices of the member points, ascending.
    pub members: Vec<usize>,
    /// Arithmetic mean of member reflectivities.
    pub mean_reflectivity: f64,
    /// Smallest clearance above ground among the members.
    pub min_clearance: f64,
}

/// Candidates bucketed into vertical pillars on a fine 2D grid anchored at
/// the ego origin.
#[derive(Debug, Clone)]
pub struct PillarGrid {
    pub dx: f64,
    pub dy: f64,
    pub cells: HashMap<(i64, i64), Pillar>,
}

/// Bucket candidate points into pillars and compute per-pillar statistics.
pub fn pillarize(
    scan: &Scan,
    candidates: &[usize],
    dx: f64,
    dy: f64,
    ground: &GroundModel,
) -> PillarGrid {
    assert!(dx > 0.0 && dy > 0.0, "pillar cell sizes must be positive");
    let mut cells: HashMap<(i64, i64), (Vec<usize>, f64, f64)> = HashMap::new();
    for &i in candidates {
        let p = &scan.points[i];
        let key = (
            (p.x as f64 / dx).floor() as i64,
            (p.y as f64 / dy).floor() as i64,
        );
        let clearance = ground.clearance(p);
        let entry = cells.entry(key).or_insert((Vec::new(), 0.0, f64::INFINITY));
        entry.0.push(i);
        entry.1 += p.r as f64;
        entry.2 = entry.2.min(clearance);
    }
    let cells = cells
        .into_iter()
        .map(|(key, (mut members, sum_r, min_clearance))| {
            members.sort_unstable();
            let mean_reflectivity = sum_r / members.len() as f64;
            (
                key,
                Pillar {
                    members,
                    mean_reflectivity,
                    min_clearance,
                },
            )
        })
        .collect();
    PillarGrid { dx, dy, cells }
}

/// Keep only candidates whose pillar looks like condensed exhaust: mean
/// reflectivity strictly below `t_r` and minimum clearance strictly above
/// `g_min`.
pub fn label_correction(grid: &PillarGrid, t_r: f64, g_min: f64) -> Vec<usize> {
    let mut out: Vec<usize> = grid
        .cells
        .values()
        .filter(|pillar| pillar.mean_reflectivity < t_r && pillar.min_clearance > g_min)
        .flat_map(|pillar| pillar.members.iter().copied())
        .collect();
    out.sort_unstable();
    out
}

/// Outcome of the proximity stage for one frame.
#[derive(Debug, Clone)]
pub struct ProximityResult {
    /// Scan indices labeled as exhaust, ascending.
    pub gas_indices: Vec<usize>,
    /// Number of cloud points inside each box's rear sphere, aligned with
    /// the input box list (zero for non-vehicle boxes).
    pub sphere_hits: Vec<usize>,
}

/// Run the full proximity stage: rear spheres of all vehicle boxes, then
/// label correction (unless disabled in the config).
pub fn detect_proximity(
    cloud: &FilteredCloud,
    boxes: &[BoundingBox3D],
    ground: &GroundModel,
    cfg: &PipelineConfig,
) -> ProximityResult {
    let back_points: Vec<[f64; 3]> = boxes
        .iter()
        .filter(|b| b.class == BoxClass::Vehicle)
        .map(|b| b.back_point())
        .collect();

    let candidates = sphere_candidates(cloud, &back_points, cfg.sphere_radius_m);

    let r2 = cfg.sphere_radius_m * cfg.sphere_radius_m;
    let sphere_hits = boxes
        .iter()
        .map(|b| {
            if b.class != BoxClass::Vehicle {
                return 0;
            }
            let q = b.back_point();
            cloud
                .iter()
                .filter(|(_, p)| {
                    let pos = p.pos();
                    let dx = pos[0] - q[0];
                    let dy = pos[1] - q[1];
                    let dz = pos[2] - q[2];
                    dx * dx + dy * dy + dz * dz <= r2
                })
                .count()
        })
        .collect();

    let gas_indices = if cfg.label_correction_enabled {
        let grid = pillarize(
            cloud.scan,
            &candidates,
            cfg.pillar_dx_m,
            cfg.pillar_dy_m,
            ground,
        );
        label_correction(
            &grid,
            cfg.reflectivity_threshold(),
            cfg.ground_clearance_min_m,
        )
    } else {
        candidates
    };

    ProximityResult {
        gas_indices,
        sphere_hits,
    }
}
