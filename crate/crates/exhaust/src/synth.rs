//! Deterministic synthetic scene generator.
//!
//! Produces short LiDAR sequences with known ground truth: a flat road,
//! vehicles that follow piecewise-constant speed profiles and optionally
//! emit an exhaust plume behind their rear face, bright clutter objects,
//! and (for ghost experiments) fabricated detector boxes placed over the
//! exhaust trail. Every point is derived from a counter-based generator
//! keyed by scenario seed, object, spawn frame and particle index, so a
//! scenario renders bit-identically no matter how often or in what order
//! frames are produced.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{save_boxes, save_labels, save_poses, save_scan, BoxRecord};
use crate::rng::CounterRng;
use crate::scan::{BoundingBox3D, BoxClass, Point, Pose, Scan, SemanticLabel};

/// Exhaust sits in this height band; the lower bound keeps it clear of
/// the road surface, the upper bound models dispersal.
const PLUME_Z_MIN: f64 = 0.2;
const PLUME_Z_MAX: f64 = 1.2;
/// Exhaust reflectivity stays below this fraction of full scale — condensed
/// water vapor returns almost nothing.
const PLUME_REFL_FRAC: f64 = 0.008;
/// Solid clutter and vehicle bodies return at least this fraction.
const SOLID_REFL_LO: f64 = 0.05;
const SOLID_REFL_HI: f64 = 0.5;

// Key-space domains so streams for different object kinds never collide.
const DOM_PLUME: u64 = 1;
const DOM_SURFACE: u64 = 2;
const DOM_CLUTTER: u64 = 3;
// Channels within one particle's stream.
const CH_SPAWN: u64 = 0;
const CH_REFL: u64 = 1;
const CH_JITTER: u64 = 2;

/// Flat rectangular road patch sampled on a regular grid at z = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub spacing: f64,
}

/// One stretch of a vehicle's motion profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionSegment {
    /// Segment applies to frames strictly below this index.
    pub until_frame: u32,
    pub speed_mps: f64,
    /// Whether the engine emits exhaust during this segment.
    pub emitting: bool,
}

/// Exhaust emission behind a vehicle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlumeSpec {
    /// Particles spawned per emitting frame.
    pub rate: u32,
    /// Frames a particle stays visible.
    pub lifetime: u32,
    /// Spawn point distance behind the rear face.
    pub offset_back: f64,
    /// Spawn height above the road.
    pub offset_z: f64,
    /// Standard deviation of the spawn position (halved vertically).
    pub sigma_spawn: f64,
    /// World-frame drift velocity in m/s (wind plus buoyancy).
    pub drift: [f64; 3],
    /// Per-frame isotropic positional noise while a particle is alive.
    pub jitter: f64,
}

/// A vehicle driving along a fixed heading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VehicleSpec {
    /// Center position at frame 0 (xy), and fixed center height.
    pub start: [f64; 2],
    pub center_z: f64,
    /// Heading in radians; the vehicle drives along this direction.
    pub heading: f64,
    /// Length, width, height of the body.
    pub size: [f64; 3],
    /// Piecewise motion profile; the last segment extends forever.
    pub segments: Vec<MotionSegment>,
    /// LiDAR returns sampled on the body per frame.
    pub surface_points: usize,
    /// Detector confidence for the emitted box record; absent for a
    /// ground-truth box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plume: Option<PlumeSpec>,
}

/// Static bright objects that must never be classified as exhaust.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClutterSpec {
    Pole {
        center: [f64; 2],
        radius: f64,
        height: f64,
        points_per_frame: usize,
    },
    Wall {
        from: [f64; 2],
        to: [f64; 2],
        height: f64,
        points_per_frame: usize,
    },
}

/// A fabricated detector box (no object underneath) for ghost experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FakeBoxSpec {
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
    pub score: f64,
    /// Active for frames in `from_frame..to_frame`.
    pub from_frame: u32,
    pub to_frame: u32,
}

/// A complete scenario description, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub seed: u64,
    pub frames: u32,
    /// Seconds per frame.
    pub dt: f64,
    /// Full scale of the reflectivity channel.
    pub r_max: f64,
    pub ground: GroundSpec,
    #[serde(default)]
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub clutter: Vec<ClutterSpec>,
    #[serde(default)]
    pub fake_boxes: Vec<FakeBoxSpec>,
}

impl VehicleSpec {
    fn segment_at(&self, t: u32) -> &MotionSegment {
        self.segments
            .iter()
            .find(|s| t < s.until_frame)
            .unwrap_or_else(|| self.segments.last().expect("validated non-empty"))
    }

    /// Center position at frame `t`: speeds integrated frame by frame.
    fn center_at(&self, t: u32, dt: f64) -> [f64; 3] {
        let mut travelled = 0.0;
        for f in 0..t {
            travelled += self.segment_at(f).speed_mps * dt;
        }
        [
            self.start[0] + travelled * self.heading.cos(),
            self.start[1] + travelled * self.heading.sin(),
            self.center_z,
        ]
    }

    fn box_at(&self, t: u32, dt: f64) -> BoundingBox3D {
        BoundingBox3D::new(
            self.center_at(t, dt),
            self.size[0],
            self.size[1],
            self.size[2],
            self.heading,
            BoxClass::Vehicle,
            self.score,
        )
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Invalid(msg));
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if !self.r_max.is_finite() || self.r_max <= 0.0 {
            return fail(format!("r_max must be positive, got {}", self.r_max));
        }
        if !self.ground.spacing.is_finite() || self.ground.spacing <= 0.0 {
            return fail("ground spacing must be positive".to_string());
        }
        if self.ground.x_max < self.ground.x_min || self.ground.y_max < self.ground.y_min {
            return fail("ground extent is inverted".to_string());
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            if v.segments.is_empty() {
                return fail(format!("vehicle {i} has no motion segments"));
            }
            if v.size.iter().any(|&s| !s.is_finite() || s <= 0.0) {
                return fail(format!("vehicle {i} has a non-positive dimension"));
            }
            if let Some(p) = &v.plume {
                if p.lifetime == 0 {
                    return fail(format!("vehicle {i} plume lifetime must be at least 1"));
                }
            }
        }
        for (i, f) in self.fake_boxes.iter().enumerate() {
            if f.size.iter().any(|&s| !s.is_finite() || s <= 0.0) {
                return fail(format!("fake box {i} has a non-positive dimension"));
            }
        }
        Ok(())
    }

    /// Load a scenario description from a JSON file.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            action: "read",
            path: path.to_path_buf(),
            source,
        })?;
        let spec: ScenarioSpec = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Built-in scenarios, each exercising one behavior of the detector.
    pub fn preset(name: &str) -> Option<ScenarioSpec> {
        let ground = GroundSpec {
            x_min: -5.0,
            x_max: 30.0,
            y_min: -8.0,
            y_max: 8.0,
            spacing: 0.5,
        };
        let car =
            |start: [f64; 2], segments: Vec<MotionSegment>, plume: Option<PlumeSpec>| VehicleSpec {
                start,
                center_z: 0.9,
                heading: 0.0,
                size: [4.2, 1.9, 1.6],
                segments,
                surface_points: 120,
                score: None,
                plume,
            };
        let idle_plume = PlumeSpec {
            rate: 6,
            lifetime: 25,
            offset_back: 0.6,
            offset_z: 0.7,
            sigma_spawn: 0.15,
            drift: [-0.15, 0.0, 0.04],
            jitter: 0.02,
        };
        let spec = |name: &str, frames: u32, vehicles, clutter, fake_boxes| ScenarioSpec {
            name: name.to_string(),
            seed: 0,
            frames,
            dt: 0.1,
            r_max: 1.0,
            ground: ground.clone(),
            vehicles,
            clutter,
            fake_boxes,
        };
        let seg = |until_frame: u32, speed_mps: f64, emitting: bool| MotionSegment {
            until_frame,
            speed_mps,
            emitting,
        };
        Some(match name {
            // A stationary car idling with its engine on: the plume hangs
            // in the rear sphere for the whole sequence.
            "idle" => spec(
                name,
                40,
                vec![car([8.0, 0.0], vec![seg(40, 0.0, true)], Some(idle_plume))],
                vec![],
                vec![],
            ),
            // The car idles, then drives off and leaves its trail behind;
            // only memory can keep labeling the trail.
            "accelerate" => spec(
                name,
                45,
                vec![car(
                    [8.0, 0.0],
                    vec![seg(12, 0.0, true), seg(45, 8.0, false)],
                    Some(PlumeSpec {
                        rate: 6,
                        lifetime: 300,
                        offset_back: 0.6,
                        offset_z: 0.7,
                        sigma_spawn: 0.15,
                        drift: [0.0, 0.0, 0.02],
                        jitter: 0.02,
                    }),
                )],
                vec![],
                vec![],
            ),
            // The car stops emitting and a crosswind pushes the cloud out
            // of the rear sphere; only a memory that keeps re-saving its
            // own recoveries can follow it.
            "drift" => spec(
                name,
                60,
                vec![car(
                    [8.0, 0.0],
                    vec![seg(10, 0.0, true), seg(60, 0.0, false)],
                    Some(PlumeSpec {
                        rate: 6,
                        lifetime: 300,
                        offset_back: 0.7,
                        offset_z: 0.7,
                        sigma_spawn: 0.15,
                        drift: [0.0, 0.55, 0.01],
                        jitter: 0.02,
                    }),
                )],
                vec![],
                vec![],
            ),
            // Engine off, bright clutter near the rear: nothing may be
            // classified as exhaust.
            "no_gas_control" => spec(
                name,
                30,
                vec![car([8.0, 0.0], vec![seg(30, 0.0, false)], None)],
                vec![
                    ClutterSpec::Pole {
                        center: [4.8, 1.4],
                        radius: 0.15,
                        height: 2.0,
                        points_per_frame: 60,
                    },
                    ClutterSpec::Wall {
                        from: [-2.0, -4.0],
                        to: [14.0, -4.0],
                        height: 2.0,
                        points_per_frame: 120,
                    },
                ],
                vec![],
            ),
            // Idling car with a bright pole inside the rear sphere: label
            // correction must keep the pole out of the exhaust class.
            "clutter_near_rear" => spec(
                name,
                40,
                vec![car([8.0, 0.0], vec![seg(40, 0.0, true)], Some(idle_plume))],
                vec![ClutterSpec::Pole {
                    center: [4.8, 1.4],
                    radius: 0.15,
                    height: 2.0,
                    points_per_frame: 60,
                }],
                vec![],
            ),
            // A scored detection follows the real car; after the car drives
            // off, a fabricated scored box appears over the abandoned trail.
            "ghost_bait" => {
                let mut v = car(
                    [6.0, 0.0],
                    vec![seg(10, 0.0, true), seg(32, 8.0, false)],
                    Some(PlumeSpec {
                        rate: 8,
                        lifetime: 300,
                        offset_back: 0.8,
                        offset_z: 0.7,
                        sigma_spawn: 0.12,
                        drift: [0.0, 0.0, 0.01],
                        jitter: 0.02,
                    }),
                );
                v.score = Some(0.97);
                spec(
                    name,
                    32,
                    vec![v],
                    vec![],
                    vec![FakeBoxSpec {
                        center: [3.1, 0.0, 1.0],
                        size: [2.2, 2.2, 1.0],
                        yaw: 0.0,
                        score: 0.95,
                        from_frame: 16,
                        to_frame: 32,
                    }],
                )
            }
            _ => return None,
        })
    }
}

/// Append one vehicle's body returns for frame `t`.
fn render_surface(
    spec: &ScenarioSpec,
    vi: usize,
    t: u32,
    points: &mut Vec<Point>,
    labels: &mut Vec<SemanticLabel>,
) {
    let v = &spec.vehicles[vi];
    let center = v.center_at(t, spec.dt);
    // Sample a shell a few millimeters inside the body so the f32-rounded
    // returns stay strictly inside the bounding box.
    const INSET: f64 = 0.005;
    let (half_l, half_w, half_h) = (
        v.size[0] / 2.0 - INSET,
        v.size[1] / 2.0 - INSET,
        v.size[2] / 2.0 - INSET,
    );
    let (cos_h, sin_h) = (v.heading.cos(), v.heading.sin());
    for k in 0..v.surface_points {
        let mut rng = CounterRng::keyed(spec.seed, &[DOM_SURFACE, vi as u64, t as u64, k as u64]);
        let a = rng.range(-1.0, 1.0);
        let b = rng.range(-1.0, 1.0);
        // Local (lx, ly, lz) on one of the five visible faces.
        let (lx, ly, lz) = match k % 5 {
            0 => (a * half_l, b * half_w, half_h),  // roof
            1 => (half_l, a * half_w, b * half_h),  // front
            2 => (-half_l, a * half_w, b * half_h), // rear
            3 => (a * half_l, half_w, b * half_h),  // left
            _ => (a * half_l, -half_w, b * half_h), // right
        };
        let x = center[0] + cos_h * lx - sin_h * ly;
        let y = center[1] + sin_h * lx + cos_h * ly;
        let z = center[2] + lz;
        let r = rng.range(SOLID_REFL_LO, SOLID_REFL_HI) * spec.r_max;
        points.push(Point::new(x as f32, y as f32, z as f32, r as f32));
        labels.push(SemanticLabel::Other);
    }
}

/// Append every particle of vehicle `vi` that is alive at frame `t`.
fn render_plume(
    spec: &ScenarioSpec,
    vi: usize,
    t: u32,
    points: &mut Vec<Point>,
    labels: &mut Vec<SemanticLabel>,
) {
    let v = &spec.vehicles[vi];
    let Some(plume) = &v.plume else { return };
    let oldest = (t + 1).saturating_sub(plume.lifetime);
    for s in oldest..=t {
        if !v.segment_at(s).emitting {
            continue;
        }
        let center = v.center_at(s, spec.dt);
        let (cos_h, sin_h) = (v.heading.cos(), v.heading.sin());
        let base = [
            center[0] - cos_h * (v.size[0] / 2.0 + plume.offset_back),
            center[1] - sin_h * (v.size[0] / 2.0 + plume.offset_back),
            plume.offset_z,
        ];
        let age = (t - s) as f64 * spec.dt;
        for k in 0..plume.rate {
            let mut spawn_rng = CounterRng::keyed(
                spec.seed,
                &[DOM_PLUME, vi as u64, s as u64, k as u64, CH_SPAWN],
            );
            let spawn = [
                base[0] + plume.sigma_spawn * spawn_rng.normal(),
                base[1] + plume.sigma_spawn * spawn_rng.normal(),
                base[2] + 0.5 * plume.sigma_spawn * spawn_rng.normal(),
            ];
            let mut jitter_rng = CounterRng::keyed(
                spec.seed,
                &[
                    DOM_PLUME, vi as u64, s as u64, k as u64, CH_JITTER, t as u64,
                ],
            );
            let x = spawn[0] + plume.drift[0] * age + plume.jitter * jitter_rng.normal();
            let y = spawn[1] + plume.drift[1] * age + plume.jitter * jitter_rng.normal();
            let z = (spawn[2] + plume.drift[2] * age + plume.jitter * jitter_rng.normal())
                .clamp(PLUME_Z_MIN, PLUME_Z_MAX);
            let mut refl_rng = CounterRng::keyed(
                spec.seed,
                &[DOM_PLUME, vi as u64, s as u64, k as u64, CH_REFL],
            );
            let r = refl_rng.range(0.0, PLUME_REFL_FRAC) * spec.r_max;
            points.push(Point::new(x as f32, y as f32, z as f32, r as f32));
            labels.push(SemanticLabel::Gas);
        }
    }
}

/// Append one clutter object's returns for frame `t`.
fn render_clutter(
    spec: &ScenarioSpec,
    ci: usize,
    t: u32,
    points: &mut Vec<Point>,
    labels: &mut Vec<SemanticLabel>,
) {
    let make_r = |rng: &mut CounterRng| rng.range(SOLID_REFL_LO, SOLID_REFL_HI) * spec.r_max;
    match &spec.clutter[ci] {
        ClutterSpec::Pole {
            center,
            radius,
            height,
            points_per_frame,
        } => {
            for k in 0..*points_per_frame {
                let mut rng =
                    CounterRng::keyed(spec.seed, &[DOM_CLUTTER, ci as u64, t as u64, k as u64]);
                let phi = rng.range(0.0, std::f64::consts::TAU);
                let x = center[0] + radius * phi.cos();
                let y = center[1] + radius * phi.sin();
                let z = rng.range(0.05, *height);
                let r = make_r(&mut rng);
                points.push(Point::new(x as f32, y as f32, z as f32, r as f32));
                labels.push(SemanticLabel::Other);
            }
        }
        ClutterSpec::Wall {
            from,
            to,
            height,
            points_per_frame,
        } => {
            for k in 0..*points_per_frame {
                let mut rng =
                    CounterRng::keyed(spec.seed, &[DOM_CLUTTER, ci as u64, t as u64, k as u64]);
                let s = rng.uniform();
                let x = from[0] + s * (to[0] - from[0]);
                let y = from[1] + s * (to[1] - from[1]);
                let z = rng.range(0.05, *height);
                let r = make_r(&mut rng);
                points.push(Point::new(x as f32, y as f32, z as f32, r as f32));
                labels.push(SemanticLabel::Other);
            }
        }
    }
}

/// Render one frame: the scan with ground-truth labels attached, plus the
/// box records (vehicle boxes and any active fabricated boxes).
pub fn render_frame(spec: &ScenarioSpec, t: u32) -> (Scan, Vec<BoxRecord>) {
    let mut points = Vec::new();
    let mut labels = Vec::new();

    // Road grid at z = 0, constant mid-range reflectivity.
    let nx = ((spec.ground.x_max - spec.ground.x_min) / spec.ground.spacing).floor() as i64;
    let ny = ((spec.ground.y_max - spec.ground.y_min) / spec.ground.spacing).floor() as i64;
    for i in 0..=nx {
        for j in 0..=ny {
            let x = spec.ground.x_min + i as f64 * spec.ground.spacing;
            let y = spec.ground.y_min + j as f64 * spec.ground.spacing;
            points.push(Point::new(
                x as f32,
                y as f32,
                0.0,
                (0.3 * spec.r_max) as f32,
            ));
            labels.push(SemanticLabel::Road);
        }
    }

    for vi in 0..spec.vehicles.len() {
        render_surface(spec, vi, t, &mut points, &mut labels);
    }
    for vi in 0..spec.vehicles.len() {
        render_plume(spec, vi, t, &mut points, &mut labels);
    }
    for ci in 0..spec.clutter.len() {
        render_clutter(spec, ci, t, &mut points, &mut labels);
    }

    let mut records: Vec<BoxRecord> = spec
        .vehicles
        .iter()
        .map(|v| BoxRecord::from_box(t, &v.box_at(t, spec.dt)))
        .collect();
    for f in &spec.fake_boxes {
        if (f.from_frame..f.to_frame).contains(&t) {
            let b = BoundingBox3D::new(
                f.center,
                f.size[0],
                f.size[1],
                f.size[2],
                f.yaw,
                BoxClass::Vehicle,
                Some(f.score),
            );
            records.push(BoxRecord::from_box(t, &b));
        }
    }

    let scan = Scan {
        t,
        points,
        gt_labels: Some(labels),
    };
    (scan, records)
}

/// Totals reported after writing a scenario to disk.
#[derive(Debug, Clone, Copy)]
pub struct SynthSummary {
    pub frames: u32,
    pub points: u64,
}

/// Write a scenario as a sequence directory: `scans/NNNNNN.bin`,
/// `labels/NNNNNN.label`, `boxes.jsonl` and identity `poses.txt`.
pub fn generate(spec: &ScenarioSpec, out_dir: &Path) -> Result<SynthSummary> {
    spec.validate()?;
    let scans_dir = out_dir.join("scans");
    let labels_dir = out_dir.join("labels");
    for dir in [&scans_dir, &labels_dir] {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            action: "create directory",
            path: dir.clone(),
            source,
        })?;
    }

    let mut records = Vec::new();
    let mut points = 0u64;
    for t in 0..spec.frames {
        let (scan, mut frame_records) = render_frame(spec, t);
        let stem = format!("{t:06}");
        save_scan(&scans_dir.join(format!("{stem}.bin")), &scan)?;
        save_labels(
            &labels_dir.join(format!("{stem}.label")),
            scan.gt_labels.as_ref().expect("generator attaches labels"),
        )?;
        records.append(&mut frame_records);
        points += scan.points.len() as u64;
    }
    save_boxes(&out_dir.join("boxes.jsonl"), &records)?;
    save_poses(
        &out_dir.join("poses.txt"),
        &vec![Pose::identity(); spec.frames as usize],
    )?;
    Ok(SynthSummary {
        frames: spec.frames,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(name: &str, seed: u64) -> ScenarioSpec {
        let mut spec = ScenarioSpec::preset(name).expect("known preset");
        spec.seed = seed;
        spec
    }

    #[test]
    fn unknown_preset_is_none() {
        assert!(ScenarioSpec::preset("warp_drive").is_none());
    }

    #[test]
    fn presets_validate() {
        for name in [
            "idle",
            "accelerate",
            "drift",
            "no_gas_control",
            "clutter_near_rear",
            "ghost_bait",
        ] {
            preset(name, 7).validate().unwrap();
        }
    }

    #[test]
    fn live_particle_count_reaches_rate_times_lifetime() {
        let spec = preset("idle", 3);
        let plume = spec.vehicles[0].plume.as_ref().unwrap();
        let (rate, lifetime) = (plume.rate, plume.lifetime);
        // Warm-up: at frame t < lifetime only (t+1) generations are alive.
        let (scan, _) = render_frame(&spec, 4);
        let gas = |scan: &Scan| {
            scan.gt_labels
                .as_ref()
                .unwrap()
                .iter()
                .filter(|&&l| l == SemanticLabel::Gas)
                .count() as u32
        };
        assert_eq!(gas(&scan), rate * 5);
        // Steady state: exactly rate × lifetime particles.
        for t in [lifetime - 1, lifetime, lifetime + 7] {
            let (scan, _) = render_frame(&spec, t);
            assert_eq!(gas(&scan), rate * lifetime, "frame {t}");
        }
    }

    #[test]
    fn rendering_is_deterministic_and_order_free() {
        let spec = preset("drift", 11);
        // Render frame 20 twice, and once after rendering other frames.
        let (a, boxes_a) = render_frame(&spec, 20);
        render_frame(&spec, 3);
        render_frame(&spec, 55);
        let (b, boxes_b) = render_frame(&spec, 20);
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(
                (p.x.to_bits(), p.y.to_bits(), p.z.to_bits(), p.r.to_bits()),
                (q.x.to_bits(), q.y.to_bits(), q.z.to_bits(), q.r.to_bits())
            );
        }
        assert_eq!(a.gt_labels, b.gt_labels);
        assert_eq!(
            serde_json::to_string(&boxes_a).unwrap(),
            serde_json::to_string(&boxes_b).unwrap()
        );
    }

    #[test]
    fn generated_directories_are_byte_identical_across_runs() {
        let spec = {
            let mut s = preset("ghost_bait", 5);
            s.frames = 6; // keep the on-disk test quick
            s
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        generate(&spec, dir_a.path()).unwrap();
        generate(&spec, dir_b.path()).unwrap();
        for rel in [
            "scans/000000.bin",
            "scans/000005.bin",
            "labels/000003.label",
            "boxes.jsonl",
            "poses.txt",
        ] {
            let a = fs::read(dir_a.path().join(rel)).unwrap();
            let b = fs::read(dir_b.path().join(rel)).unwrap();
            assert_eq!(a, b, "{rel} differs between runs");
        }
        // A different seed must change the point data.
        let spec2 = {
            let mut s = preset("ghost_bait", 6);
            s.frames = 6;
            s
        };
        let dir_c = tempfile::tempdir().unwrap();
        generate(&spec2, dir_c.path()).unwrap();
        let a = fs::read(dir_a.path().join("scans/000000.bin")).unwrap();
        let c = fs::read(dir_c.path().join("scans/000000.bin")).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ground_truth_is_consistent_with_the_correction_rules() {
        // Exhaust must be faint and clearly above the road; solid returns
        // must be bright enough for the reflectivity rule to reject them.
        for name in [
            "idle",
            "accelerate",
            "drift",
            "clutter_near_rear",
            "ghost_bait",
        ] {
            let spec = preset(name, 13);
            for t in [0, spec.frames / 2, spec.frames - 1] {
                let (scan, _) = render_frame(&spec, t);
                let labels = scan.gt_labels.as_ref().unwrap();
                for (p, &label) in scan.points.iter().zip(labels) {
                    match label {
                        SemanticLabel::Gas => {
                            assert!(
                                (p.r as f64) < 0.01 * spec.r_max,
                                "{name} frame {t}: exhaust point too bright ({})",
                                p.r
                            );
                            assert!(
                                (p.z as f64) >= PLUME_Z_MIN,
                                "{name} frame {t}: exhaust point touches the road"
                            );
                        }
                        SemanticLabel::Road => assert_eq!(p.z, 0.0),
                        SemanticLabel::Other => assert!(
                            (p.r as f64) >= SOLID_REFL_LO * spec.r_max,
                            "{name} frame {t}: solid point too faint ({})",
                            p.r
                        ),
                    }
                }
            }
        }
    }

    #[test]
    fn surface_points_stay_inside_their_box_and_particles_outside() {
        let spec = preset("accelerate", 17);
        for t in [0, 20, 44] {
            let (scan, records) = render_frame(&spec, t);
            let labels = scan.gt_labels.as_ref().unwrap();
            let boxes: Vec<_> = records.iter().map(|r| r.to_box()).collect();
            for (p, &label) in scan.points.iter().zip(labels) {
                match label {
                    SemanticLabel::Other => assert!(
                        boxes.iter().any(|b| b.contains(p)),
                        "frame {t}: body return outside every box"
                    ),
                    SemanticLabel::Gas => assert!(
                        boxes.iter().all(|b| !b.contains(p)),
                        "frame {t}: exhaust inside a box at ({}, {}, {})",
                        p.x,
                        p.y,
                        p.z
                    ),
                    SemanticLabel::Road => {}
                }
            }
        }
    }

    #[test]
    fn control_scene_contains_no_exhaust() {
        let spec = preset("no_gas_control", 23);
        for t in 0..spec.frames {
            let (scan, _) = render_frame(&spec, t);
            assert!(scan
                .gt_labels
                .unwrap()
                .iter()
                .all(|&l| l != SemanticLabel::Gas));
        }
    }

    #[test]
    fn piecewise_motion_integrates_per_frame() {
        let spec = preset("accelerate", 1);
        let v = &spec.vehicles[0];
        // Stationary through the first segment...
        assert_eq!(v.center_at(0, spec.dt)[0], 8.0);
        assert_eq!(v.center_at(12, spec.dt)[0], 8.0);
        // ...then 8 m/s × 0.1 s per frame.
        let x13 = v.center_at(13, spec.dt)[0];
        assert!((x13 - 8.8).abs() < 1e-9);
        let x20 = v.center_at(20, spec.dt)[0];
        assert!((x20 - (8.0 + 8.0 * 0.1 * 8.0)).abs() < 1e-9);
    }

    #[test]
    fn fake_boxes_appear_only_in_their_frame_window() {
        let spec = preset("ghost_bait", 29);
        let (_, r15) = render_frame(&spec, 15);
        let (_, r16) = render_frame(&spec, 16);
        let (_, r31) = render_frame(&spec, 31);
        assert_eq!(r15.len(), 1);
        assert_eq!(r16.len(), 2);
        assert_eq!(r31.len(), 2);
        let fake = &r16[1];
        assert_eq!(fake.score, Some(0.95));
        // The real car's detection carries its own confidence.
        assert_eq!(r16[0].score, Some(0.97));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = preset("clutter_near_rear", 31);
        let json = serde_json::to_string_pretty(&spec).unwrap();
        let parsed: ScenarioSpec = serde_json::from_str(&json).unwrap();
        let (a, _) = render_frame(&spec, 9);
        let (b, _) = render_frame(&parsed, 9);
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.x.to_bits(), q.x.to_bits());
            assert_eq!(p.r.to_bits(), q.r.to_bits());
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = preset("idle", 1);
        spec.dt = 0.0;
        assert!(spec.validate().is_err());

        let mut spec = preset("idle", 1);
        spec.vehicles[0].segments.clear();
        assert!(spec.validate().is_err());

        let mut spec = preset("idle", 1);
        spec.ground.spacing = -0.5;
        assert!(spec.validate().is_err());
    }
}
