//! Second detection stage: temporal memory for isolated exhaust clouds.
//!
//! A cloud stops being detectable by the proximity stage the moment its
//! emitter drives away, yet it lingers in the air for many seconds. To
//! keep recognizing it, every detected cloud is remembered as a Gaussian
//! footprint with a time stamp. Each frame:
//!
//! 1. detections older than a time-to-live are discarded,
//! 2. the remaining footprints are rasterized into a 2D likelihood grid —
//!    each Gaussian is evaluated at cell centers out to three Mahalanobis
//!    units and accumulated, then the grid is normalized by its maximum —
//! 3. points of the working cloud falling into a positive cell become
//!    candidates for the isolated-cloud label.
//!
//! With an ego pose available, footprints are stored in the world frame
//! and projected back into the current sensor frame when the grid is
//! built, so remembered clouds stay anchored to the world while the
//! vehicle moves.

use std::collections::HashMap;

use crate::clustering::GasCluster;
use crate::error::{Error, Result};
use crate::mat2;
use crate::scan::{Point, Pose};

/// Which stage produced a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionSource {
    /// Rear-sphere proximity stage.
    Proximity,
    /// Likelihood-grid (isolated cloud) stage.
    Isolated,
}

/// One remembered cloud footprint.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Time step at which the cloud was seen.
    pub t: u32,
    /// 2D mean, in the world frame when a pose was given at insert time,
    /// otherwise in the sensor frame.
    pub mean: [f64; 2],
    /// 2D covariance in the same frame as `mean`; positive definite.
    pub cov: [[f64; 2]; 2],
    pub source: DetectionSource,
}

/// Bounded-age set of remembered detections.
#[derive(Debug, Clone)]
pub struct DetectionHistory {
    /// Detections live for this many time steps (a detection made at `t`
    /// is gone once `t_now - t >= ttl`).
    pub ttl: u32,
    /// Time step of the most recently processed frame, used to enforce
    /// monotonic sequences.
    pub last_frame: Option<u32>,
    detections: Vec<Detection>,
}

impl DetectionHistory {
    pub fn new(ttl: u32) -> Self {
        assert!(ttl > 0, "history TTL must be at least one step");
        DetectionHistory {
            ttl,
            last_frame: None,
            detections: Vec::new(),
        }
    }

    /// Remember cluster footprints seen at time `t`. With a pose the
    /// footprints are transformed into the world frame first.
    pub fn insert(
        &mut self,
        clusters: &[GasCluster],
        t: u32,
        pose: Option<&Pose>,
        source: DetectionSource,
    ) {
        for c in clusters {
            let (mean, cov) = match pose {
                Some(pose) => (
                    pose.to_world2(c.mean),
                    mat2::rotate_cov(pose.rotation2(), c.cov),
                ),
                None => (c.mean, c.cov),
            };
            self.detections.push(Detection {
                t,
                mean,
                cov,
                source,
            });
        }
    }

    /// Drop detections whose age reached the TTL. Detections from the
    /// current step have age zero and always survive.
    pub fn prune(&mut self, t_now: u32) {
        let ttl = self.ttl as i64;
        self.detections
            .retain(|d| (t_now as i64 - d.t as i64) < ttl);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Detection> {
        self.detections.iter()
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Max-normalized 2D likelihood of remembered exhaust, on a square grid
/// centered on the sensor.
#[derive(Debug, Clone)]
pub struct LikelihoodGrid {
    pub dx: f64,
    pub dy: f64,
    /// Half of the square extent: coordinates with `|x|, |y| < half` are
    /// covered by the grid.
    pub half: f64,
    /// Nonzero cell values keyed by cell index; empty when nothing is
    /// remembered. Values lie in `(0, 1]` with at least one exact 1 when
    /// any detection contributed.
    pub cells: HashMap<(i64, i64), f64>,
}

impl LikelihoodGrid {
    fn cell_index(&self, x: f64, y: f64) -> Option<(i64, i64)> {
        if x < -self.half || x >= self.half || y < -self.half || y >= self.half {
            return None;
        }
        Some(((x / self.dx).floor() as i64, (y / self.dy).floor() as i64))
    }

    /// Likelihood value under a point; zero outside the extent and in
    /// cells no remembered cloud reaches.
    pub fn query(&self, p: &Point) -> f64 {
        self.value_at(p.x as f64, p.y as f64)
    }

    /// Likelihood value at an (x, y) position.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        self.cell_index(x, y)
            .and_then(|key| self.cells.get(&key).copied())
            .unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.cells.values().copied().fold(0.0, f64::max)
    }

    /// Render as a binary PGM image (for `--dump-grid`). The image covers
    /// the bounding rectangle of nonzero cells; a comment line records the
    /// cell index of the top-left pixel so positions can be recovered.
    pub fn to_pgm(&self) -> Vec<u8> {
        if self.cells.is_empty() {
            return b"P5\n# empty\n1 1\n255\n\0".to_vec();
        }
        let min_i = self.cells.keys().map(|k| k.0).min().unwrap();
        let max_i = self.cells.keys().map(|k| k.0).max().unwrap();
        let min_j = self.cells.keys().map(|k| k.1).min().unwrap();
        let max_j = self.cells.keys().map(|k| k.1).max().unwrap();
        let w = (max_i - min_i + 1) as usize;
        let h = (max_j - min_j + 1) as usize;
        let mut out = format!(
            "P5\n# cell origin {min_i} {min_j} dx {} dy {}\n{w} {h}\n255\n",
            self.dx, self.dy
        )
        .into_bytes();
        // Row 0 is the highest y so the image reads like a map.
        for row in 0..h {
            let j = max_j - row as i64;
            for col in 0..w {
                let i = min_i + col as i64;
                let v = self.cells.get(&(i, j)).copied().unwrap_or(0.0);
                out.push((v * 255.0).round() as u8);
            }
        }
        out
    }
}

/// Rasterize the remembered detections into a likelihood grid.
///
/// Each detection contributes its Gaussian density, evaluated at cell
/// centers within three Mahalanobis units (exactly zero beyond); overlaps
/// accumulate, and the finished grid is divided by its maximum so values
/// span `(0, 1]`. With a pose, stored world-frame footprints are projected
/// into the current sensor frame first.
pub fn build_grid(
    history: &DetectionHistory,
    extent: f64,
    dx: f64,
    dy: f64,
    pose: Option<&Pose>,
) -> Result<LikelihoodGrid> {
    if !(extent > 0.0 && dx > 0.0 && dy > 0.0) || extent / dx < 1.0 || extent / dy < 1.0 {
        return Err(Error::EmptyGrid {
            extent,
            cell: dx.min(dy),
        });
    }
    let half = extent / 2.0;
    let mut cells: HashMap<(i64, i64), f64> = HashMap::new();
    // Index range of cells overlapping the extent.
    let i_lo = (-half / dx).floor() as i64;
    let i_hi = (half / dx).floor() as i64;
    let j_lo = (-half / dy).floor() as i64;
    let j_hi = (half / dy).floor() as i64;

    for d in history.iter() {
        let (mean, cov) = match pose {
            Some(pose) => {
                let r = pose.rotation2();
                let rt = [[r[0][0], r[1][0]], [r[0][1], r[1][1]]];
                (pose.to_local2(d.mean), mat2::rotate_cov(rt, d.cov))
            }
            None => (d.mean, d.cov),
        };
        let Some((det, inv)) = mat2::invert_spd(cov) else {
            debug_assert!(false, "history covariance must be positive definite");
            continue;
        };
        let norm = 1.0 / (std::f64::consts::TAU * det.sqrt());
        // The 3-Mahalanobis ellipse is bounded by +-3*sigma per axis.
        let bx = 3.0 * cov[0][0].sqrt();
        let by = 3.0 * cov[1][1].sqrt();
        let ci_lo = (((mean[0] - bx) / dx).floor() as i64).max(i_lo);
        let ci_hi = (((mean[0] + bx) / dx).floor() as i64).min(i_hi);
        let cj_lo = (((mean[1] - by) / dy).floor() as i64).max(j_lo);
        let cj_hi = (((mean[1] + by) / dy).floor() as i64).min(j_hi);
        for i in ci_lo..=ci_hi {
            let cx = (i as f64 + 0.5) * dx - mean[0];
            for j in cj_lo..=cj_hi {
                let cy = (j as f64 + 0.5) * dy - mean[1];
                let m2 = inv[0][0] * cx * cx + 2.0 * inv[0][1] * cx * cy + inv[1][1] * cy * cy;
                if m2 <= 9.0 {
                    *cells.entry((i, j)).or_insert(0.0) += norm * (-0.5 * m2).exp();
                }
            }
        }
    }

    let max = cells.values().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for v in cells.values_mut() {
            *v /= max;
        }
    }
    Ok(LikelihoodGrid {
        dx,
        dy,
        half,
        cells,
    })
}
