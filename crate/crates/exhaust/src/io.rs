//! Readers and writers for the on-disk formats.
//!
//! * Scans: `<frame>.bin`, little-endian `f32` quadruples `x, y, z, r`,
//!   16 bytes per point, or `.csv` with an `x,y,z,r` header.
//! * Labels: `<frame>.label`, one byte per point (0 other, 1 gas, 2 road).
//! * Boxes: `boxes.jsonl`, one JSON object per line.
//! * Poses: `poses.txt`, 12 whitespace-separated floats per line forming a
//!   row-major 3x4 `[R|t]` matrix.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan::{BoundingBox3D, BoxClass, Point, Pose, Scan, SemanticLabel};

const POINT_BYTES: usize = 16;

fn io_err(action: &'static str, path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        action,
        path: path.to_path_buf(),
        source,
    }
}

/// Load a point cloud from `.bin` (by default) or `.csv` (by extension).
///
/// The returned scan has `t = 0`; the caller assigns the real time step.
pub fn load_scan(path: &Path) -> Result<Scan> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => load_scan_csv(path),
        _ => load_scan_bin(path),
    }
}

fn load_scan_bin(path: &Path) -> Result<Scan> {
    let mut file = File::open(path).map_err(|e| io_err("open", path, e))?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)
        .map_err(|e| io_err("read", path, e))?;
    if buf.len() % POINT_BYTES != 0 {
        return Err(Error::TruncatedRecord {
            path: path.to_path_buf(),
            len: buf.len() as u64,
        });
    }
    let mut points = Vec::with_capacity(buf.len() / POINT_BYTES);
    for (i, rec) in buf.chunks_exact(POINT_BYTES).enumerate() {
        let f = |o: usize| f32::from_le_bytes([rec[o], rec[o + 1], rec[o + 2], rec[o + 3]]);
        let p = Point::new(f(0), f(4), f(8), f(12));
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite() && p.r.is_finite()) {
            return Err(Error::NonFinite {
                path: path.to_path_buf(),
                index: i,
            });
        }
        points.push(p);
    }
    Ok(Scan {
        t: 0,
        points,
        gt_labels: None,
    })
}

fn load_scan_csv(path: &Path) -> Result<Scan> {
    let file = File::open(path).map_err(|e| io_err("open", path, e))?;
    let reader = BufReader::new(file);
    let malformed = |line: usize, msg: &str| Error::Malformed {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err("read", path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 {
            let header: Vec<&str> = line.split(',').map(str::trim).collect();
            if header != ["x", "y", "z", "r"] {
                return Err(malformed(1, "expected header `x,y,z,r`"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(malformed(i + 1, "expected 4 comma-separated values"));
        }
        let mut vals = [0f32; 4];
        for (v, field) in vals.iter_mut().zip(&fields) {
            *v = field
                .parse::<f32>()
                .map_err(|_| malformed(i + 1, "not a number"))?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    path: path.to_path_buf(),
                    index: points.len(),
                });
            }
        }
        points.push(Point::new(vals[0], vals[1], vals[2], vals[3]));
    }
    Ok(Scan {
        t: 0,
        points,
        gt_labels: None,
    })
}

/// Write a point cloud as little-endian binary; round-trips bit-exactly.
pub fn save_scan(path: &Path, scan: &Scan) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err("create", path, e))?;
    let mut w = BufWriter::new(file);
    for p in &scan.points {
        for v in [p.x, p.y, p.z, p.r] {
            w.write_all(&v.to_le_bytes())
                .map_err(|e| io_err("write", path, e))?;
        }
    }
    w.flush().map_err(|e| io_err("write", path, e))
}

/// Load per-point labels; `expected` is the point count of the matching scan.
pub fn load_labels(path: &Path, expected: usize) -> Result<Vec<SemanticLabel>> {
    let labels = load_labels_raw(path)?;
    if labels.len() != expected {
        return Err(Error::LabelLength {
            expected,
            got: labels.len(),
        });
    }
    Ok(labels)
}

/// Load a label file on its own, taking its length at face value.
pub fn load_labels_raw(path: &Path) -> Result<Vec<SemanticLabel>> {
    let mut file = File::open(path).map_err(|e| io_err("open", path, e))?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)
        .map_err(|e| io_err("read", path, e))?;
    buf.iter()
        .enumerate()
        .map(|(i, &b)| {
            SemanticLabel::from_byte(b).ok_or_else(|| Error::Malformed {
                path: path.to_path_buf(),
                line: i,
                msg: format!("unknown label byte {b}"),
            })
        })
        .collect()
}

pub fn save_labels(path: &Path, labels: &[SemanticLabel]) -> Result<()> {
    let bytes: Vec<u8> = labels.iter().map(|l| l.to_byte()).collect();
    std::fs::write(path, bytes).map_err(|e| io_err("write", path, e))
}

/// On-disk box record; one per line in `boxes.jsonl`.
#[derive(Debug, Serialize, Deserialize)]
pub struct BoxRecord {
    pub frame: u32,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
    pub class: BoxClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl BoxRecord {
    pub fn to_box(&self) -> BoundingBox3D {
        BoundingBox3D::new(
            [self.cx, self.cy, self.cz],
            self.length,
            self.width,
            self.height,
            self.yaw,
            self.class,
            self.score,
        )
    }

    pub fn from_box(frame: u32, b: &BoundingBox3D) -> Self {
        BoxRecord {
            frame,
            cx: b.center[0],
            cy: b.center[1],
            cz: b.center[2],
            length: b.length,
            width: b.width,
            height: b.height,
            yaw: b.yaw,
            class: b.class,
            score: b.confidence,
        }
    }
}

/// Read every record of a `boxes.jsonl` file, in file order.
pub fn load_boxes(path: &Path) -> Result<Vec<BoxRecord>> {
    let file = File::open(path).map_err(|e| io_err("open", path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err("read", path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BoxRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_boxes(path: &Path, records: &[BoxRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err("create", path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec).expect("box record serializes");
        writeln!(w, "{line}").map_err(|e| io_err("write", path, e))?;
    }
    w.flush().map_err(|e| io_err("write", path, e))
}

/// Load ego poses, one 3x4 `[R|t]` per line; rotations are validated.
pub fn load_poses(path: &Path) -> Result<Vec<Pose>> {
    let file = File::open(path).map_err(|e| io_err("open", path, e))?;
    let reader = BufReader::new(file);
    let mut poses = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err("read", path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected 12 floats".to_string(),
            })?;
        if vals.len() != 12 {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected 12 floats, got {}", vals.len()),
            });
        }
        let pose = Pose {
            rotation: [
                [vals[0], vals[1], vals[2]],
                [vals[4], vals[5], vals[6]],
                [vals[8], vals[9], vals[10]],
            ],
            translation: [vals[3], vals[7], vals[11]],
        };
        pose.validate(1e-6)?;
        poses.push(pose);
    }
    Ok(poses)
}

pub fn save_poses(path: &Path, poses: &[Pose]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err("create", path, e))?;
    let mut w = BufWriter::new(file);
    for p in poses {
        let r = &p.rotation;
        let t = &p.translation;
        writeln!(
            w,
            "{} {} {} {} {} {} {} {} {} {} {} {}",
            r[0][0],
            r[0][1],
            r[0][2],
            t[0],
            r[1][0],
            r[1][1],
            r[1][2],
            t[1],
            r[2][0],
            r[2][1],
            r[2][2],
            t[2],
        )
        .map_err(|e| io_err("write", path, e))?;
    }
    w.flush().map_err(|e| io_err("write", path, e))
}
