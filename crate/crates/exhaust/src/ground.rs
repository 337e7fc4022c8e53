//! Ground surface estimation and pre-filtering of the working cloud.
//!
//! The ground is modeled per cell of a coarse 2D grid as the minimum z of
//! the points falling into that cell. A point is road if it lies within a
//! tolerance above its cell's minimum. Clearance above ground — used by the
//! label-correction stage — is the height of a point over its cell minimum,
//! falling back to the median ground height for cells never observed.

use std::collections::HashMap;

use crate::scan::{BoundingBox3D, Point, Scan};

/// Grid cell index for a coarse 2D grid anchored at the ego origin.
fn cell_of(x: f64, y: f64, cell: f64) -> (i64, i64) {
    ((x / cell).floor() as i64, (y / cell).floor() as i64)
}

/// Per-cell minimum-z ground model.
#[derive(Debug, Clone)]
pub struct GroundModel {
    /// Cell edge length in meters.
    pub cell: f64,
    /// Minimum observed z per occupied cell.
    pub min_z: HashMap<(i64, i64), f64>,
    /// Median of the per-cell minima; fallback ground height for cells
    /// without observations. Zero for an empty model.
    pub z0: f64,
}

impl GroundModel {
    /// Ground height under an (x, y) position.
    pub fn ground_z(&self, x: f64, y: f64) -> f64 {
        self.min_z
            .get(&cell_of(x, y, self.cell))
            .copied()
            .unwrap_or(self.z0)
    }

    /// Height of a point above the local ground estimate.
    pub fn clearance(&self, p: &Point) -> f64 {
        p.z as f64 - self.ground_z(p.x as f64, p.y as f64)
    }
}

/// Estimate the ground model and classify road points in one pass.
///
/// Returns the model together with a mask running parallel to
/// `scan.points`; `mask[i]` is true when point `i` lies within `tol`
/// meters above the minimum z of its cell.
pub fn estimate_ground(scan: &Scan, cell: f64, tol: f64) -> (GroundModel, Vec<bool>) {
    assert!(cell > 0.0, "ground cell size must be positive");
    let mut min_z: HashMap<(i64, i64), f64> = HashMap::new();
    for p in &scan.points {
        let key = cell_of(p.x as f64, p.y as f64, cell);
        let z = p.z as f64;
        min_z.entry(key).and_modify(|m| *m = m.min(z)).or_insert(z);
    }

    let z0 = if min_z.is_empty() {
        0.0
    } else {
        let mut heights: Vec<f64> = min_z.values().copied().collect();
        heights.sort_by(|a, b| a.total_cmp(b));
        let n = heights.len();
        if n % 2 == 1 {
            heights[n / 2]
        } else {
            0.5 * (heights[n / 2 - 1] + heights[n / 2])
        }
    };

    let model = GroundModel { cell, min_z, z0 };
    let mask = scan
        .points
        .iter()
        .map(|p| {
            let zg = model.min_z[&cell_of(p.x as f64, p.y as f64, cell)];
            p.z as f64 - zg <= tol
        })
        .collect();
    (model, mask)
}

/// The working cloud: indices of scan points that are neither road nor
/// inside any of the given boxes.
#[derive(Debug, Clone)]
pub struct FilteredCloud<'a> {
    pub scan: &'a Scan,
    /// Retained indices into `scan.points`, ascending.
    pub indices: Vec<usize>,
}

impl<'a> FilteredCloud<'a> {
    /// Iterate over retained `(scan index, point)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &'a Point)> + '_ {
        self.indices.iter().map(|&i| (i, &self.scan.points[i]))
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Drop road points and points inside any box, keeping original indices.
pub fn filter_cloud<'a>(
    scan: &'a Scan,
    boxes: &[BoundingBox3D],
    road_mask: &[bool],
) -> FilteredCloud<'a> {
    debug_assert_eq!(road_mask.len(), scan.points.len());
    let indices = scan
        .points
        .iter()
        .enumerate()
        .filter(|(i, p)| !road_mask[*i] && !boxes.iter().any(|b| b.contains(p)))
        .map(|(i, _)| i)
        .collect();
    FilteredCloud { scan, indices }
}
