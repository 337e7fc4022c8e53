//! Core scan data model: points, semantic labels, oriented boxes and ego
//! poses.
//!
//! Coordinates follow the usual automotive convention: x forward, y left,
//! z up, all in meters relative to the sensor. Reflectivity is the raw
//! sensor return strength; its full-scale value `r_max` is a per-sensor
//! constant carried in the pipeline config.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One LiDAR return: position plus reflectivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    /// Return strength, in `[0, r_max]` for a well-formed scan.
    pub r: f32,
}

impl Point {
    pub fn new(x: f32, y: f32, z: f32, r: f32) -> Self {
        Point { x, y, z, r }
    }

    /// Position as f64, for geometry math.
    pub fn pos(&self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }
}

/// Per-point semantic class. The on-disk encoding is one byte per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SemanticLabel {
    Other = 0,
    Gas = 1,
    Road = 2,
}

impl SemanticLabel {
    pub fn to_byte(self) -> u8 {
        self as u8
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(SemanticLabel::Other),
            1 => Some(SemanticLabel::Gas),
            2 => Some(SemanticLabel::Road),
            _ => None,
        }
    }
}

/// One sensor sweep with an integer time step assigned by the caller.
///
/// Ground-truth labels, when present, run parallel to `points`.
#[derive(Debug, Clone, Default)]
pub struct Scan {
    /// Time step within the sequence; strictly increasing across frames.
    pub t: u32,
    pub points: Vec<Point>,
    pub gt_labels: Option<Vec<SemanticLabel>>,
}

impl Scan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Object class attached to a bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxClass {
    Vehicle,
    Other,
}

/// Oriented 3D box: axis-aligned in its own frame, rotated by `yaw` about
/// the z axis and translated to `center` in the ego frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox3D {
    pub center: [f64; 3],
    /// Extent along the box's own x axis (front-back).
    pub length: f64,
    /// Extent along the box's own y axis (left-right).
    pub width: f64,
    /// Extent along z.
    pub height: f64,
    /// Heading, normalized to `(-pi, pi]`.
    pub yaw: f64,
    pub class: BoxClass,
    /// Detector score. `None` for boxes that come from ground-truth labels.
    pub confidence: Option<f64>,
}

/// Wrap an angle to `(-pi, pi]`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = yaw % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

impl BoundingBox3D {
    pub fn new(
        center: [f64; 3],
        length: f64,
        width: f64,
        height: f64,
        yaw: f64,
        class: BoxClass,
        confidence: Option<f64>,
    ) -> Self {
        BoundingBox3D {
            center,
            length,
            width,
            height,
            yaw: normalize_yaw(yaw),
            class,
            confidence,
        }
    }

    /// Boundary-inclusive containment test.
    ///
    /// The point is moved into the box frame (translate by `-center`,
    /// rotate by `-yaw` about z) and compared against the half extents.
    pub fn contains(&self, p: &Point) -> bool {
        let dx = p.x as f64 - self.center[0];
        let dy = p.y as f64 - self.center[1];
        let dz = p.z as f64 - self.center[2];
        let (s, c) = self.yaw.sin_cos();
        // Rotation by -yaw.
        let bx = c * dx + s * dy;
        let by = -s * dx + c * dy;
        bx.abs() <= self.length / 2.0
            && by.abs() <= self.width / 2.0
            && dz.abs() <= self.height / 2.0
    }

    /// A copy grown by `delta` meters on every dimension (center and yaw
    /// unchanged). Used to absorb localization error in detector output.
    pub fn enlarged(&self, delta: f64) -> Self {
        BoundingBox3D {
            length: self.length + delta,
            width: self.width + delta,
            height: self.height + delta,
            ..self.clone()
        }
    }

    /// Midpoint of the rear face at center height: the exhaust pipe of a
    /// vehicle sits near this point.
    pub fn back_point(&self) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.center[0] - self.length / 2.0 * c,
            self.center[1] - self.length / 2.0 * s,
            self.center[2],
        ]
    }
}

/// Rigid ego pose: `world = rotation * local + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    /// Row-major rotation matrix.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0, 0.0, 0.0],
        }
    }

    /// Check orthonormality and a +1 determinant to within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let r = &self.rotation;
        let mut err: f64 = 0.0;
        // R * R^T must be the identity.
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot - expect).abs());
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        err = err.max((det - 1.0).abs());
        if err > tol {
            return Err(Error::InvalidPose { err });
        }
        Ok(())
    }

    /// The upper-left 2x2 block of the rotation; exact for yaw-only motion.
    pub fn rotation2(&self) -> [[f64; 2]; 2] {
        [
            [self.rotation[0][0], self.rotation[0][1]],
            [self.rotation[1][0], self.rotation[1][1]],
        ]
    }

    /// Map a local 2D position into the world frame.
    pub fn to_world2(&self, p: [f64; 2]) -> [f64; 2] {
        let r = self.rotation2();
        [
            r[0][0] * p[0] + r[0][1] * p[1] + self.translation[0],
            r[1][0] * p[0] + r[1][1] * p[1] + self.translation[1],
        ]
    }

    /// Map a world 2D position into the local frame (inverse of
    /// [`Pose::to_world2`] for yaw-only rotations).
    pub fn to_local2(&self, p: [f64; 2]) -> [f64; 2] {
        let r = self.rotation2();
        let dx = p[0] - self.translation[0];
        let dy = p[1] - self.translation[1];
        // R^T * d
        [r[0][0] * dx + r[1][0] * dy, r[0][1] * dx + r[1][1] * dy]
    }
}
