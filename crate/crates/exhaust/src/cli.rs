//! Command-line interface: detection runs over sequence directories,
//! ghost audits, label evaluation, and synthetic scene generation.
//!
//! A sequence directory holds `scans/NNNNNN.bin`, a `boxes.jsonl`, and
//! optionally `poses.txt` plus `labels/NNNNNN.label` ground truth.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::io::{load_boxes, load_labels_raw, load_poses, load_scan, save_labels};
use crate::metrics::{confusion, ConfusionCounts};
use crate::pipeline::{run_sequence, FrameInput};
use crate::scan::{BoundingBox3D, Pose, SemanticLabel};
use crate::synth::{generate, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(
    name = "exhaust",
    version,
    about = "Detects condensed vehicle exhaust in LiDAR point cloud sequences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label exhaust points in one or more sequences.
    Detect(DetectArgs),
    /// Audit detector boxes for ghosts: points inside boxes stay in the
    /// working cloud so a box resting on exhaust can be recognized.
    Ghost(DetectArgs),
    /// Score predicted labels against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic sequence with known ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Sequence directory; repeat for batch runs.
    #[arg(long = "seq", value_name = "DIR", required = true)]
    pub seqs: Vec<PathBuf>,
    /// Output directory (per-sequence subdirectories for batch runs).
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set sphere_radius_m=2.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Directory of external road masks (`NNNNNN.label`, road bytes mark road).
    #[arg(long = "road-mask", value_name = "DIR")]
    pub road_mask: Option<PathBuf>,
    /// Also write each frame's likelihood grid to grid/NNNNNN.pgm.
    #[arg(long = "dump-grid")]
    pub dump_grid: bool,
    /// Sequences processed in parallel.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of predicted .label files.
    #[arg(long, value_name = "DIR")]
    pub pred: PathBuf,
    /// Ground truth: a sequence directory (labels/ inside) or a label directory.
    #[arg(long, value_name = "DIR")]
    pub gt: PathBuf,
    /// Score road points too instead of ignoring them.
    #[arg(long = "include-road")]
    pub include_road: bool,
    /// Print one row per frame in addition to the total.
    #[arg(long)]
    pub records: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScenarioSource {
    /// Built-in scenario: idle, accelerate, drift, no_gas_control,
    /// clutter_near_rear or ghost_bait.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Scenario description file (JSON).
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    /// Output sequence directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Override the scenario seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Override the frame count.
    #[arg(long, value_name = "N")]
    pub frames: Option<u32>,
}

/// A validated sequence directory.
#[derive(Debug)]
struct Sequence {
    dir: PathBuf,
    /// (frame id, scan path), sorted and contiguous.
    frames: Vec<(u32, PathBuf)>,
    boxes_by_frame: HashMap<u32, Vec<BoundingBox3D>>,
    /// Index-aligned with `frames` when present.
    poses: Option<Vec<Pose>>,
}

fn manifest_err(dir: &Path, msg: impl Into<String>) -> Error {
    Error::Manifest {
        dir: dir.to_path_buf(),
        msg: msg.into(),
    }
}

/// Discover and validate a sequence directory.
fn load_sequence(dir: &Path) -> Result<Sequence> {
    let scans_dir = dir.join("scans");
    if !scans_dir.is_dir() {
        return Err(manifest_err(dir, "missing scans/ directory"));
    }
    let mut frames: Vec<(u32, PathBuf)> = Vec::new();
    let entries = fs::read_dir(&scans_dir).map_err(|source| Error::Io {
        action: "list",
        path: scans_dir.clone(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            action: "list",
            path: scans_dir.clone(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("bin") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let id: u32 = stem.parse().map_err(|_| {
            manifest_err(dir, format!("scan file `{}` is not a frame number", stem))
        })?;
        frames.push((id, path));
    }
    frames.sort_by_key(|(id, _)| *id);
    if let Some(&(first, _)) = frames.first() {
        for (k, &(id, _)) in frames.iter().enumerate() {
            let want = first + k as u32;
            if id != want {
                return Err(manifest_err(
                    dir,
                    format!("scan frames are not contiguous: expected {want:06}, found {id:06}"),
                ));
            }
        }
    }

    let boxes_path = dir.join("boxes.jsonl");
    if !boxes_path.is_file() {
        return Err(manifest_err(dir, "missing boxes.jsonl"));
    }
    let mut boxes_by_frame: HashMap<u32, Vec<BoundingBox3D>> = HashMap::new();
    let first = frames.first().map(|&(id, _)| id).unwrap_or(0);
    let last = frames.last().map(|&(id, _)| id).unwrap_or(0);
    for record in load_boxes(&boxes_path)? {
        if !frames.is_empty() && (record.frame < first || record.frame > last) {
            return Err(manifest_err(
                dir,
                format!(
                    "box record for frame {} but scans cover {first:06}..{last:06}",
                    record.frame
                ),
            ));
        }
        boxes_by_frame
            .entry(record.frame)
            .or_default()
            .push(record.to_box());
    }

    let poses_path = dir.join("poses.txt");
    let poses = if poses_path.is_file() {
        let poses = load_poses(&poses_path)?;
        if poses.len() != frames.len() {
            return Err(manifest_err(
                dir,
                format!(
                    "poses.txt has {} entries for {} scans",
                    poses.len(),
                    frames.len()
                ),
            ));
        }
        Some(poses)
    } else {
        None
    };

    Ok(Sequence {
        dir: dir.to_path_buf(),
        frames,
        boxes_by_frame,
        poses,
    })
}

/// Load the external road mask for one frame: a label file whose road
/// bytes mark road points.
fn load_road_mask(mask_dir: &Path, frame: u32) -> Result<Vec<bool>> {
    let path = mask_dir.join(format!("{frame:06}.label"));
    let labels = load_labels_raw(&path)?;
    Ok(labels.iter().map(|&l| l == SemanticLabel::Road).collect())
}

/// Run detection over one sequence, writing labels, ghost records and
/// optionally grid dumps into `out_dir`. Returns a printable summary.
fn run_one_sequence(
    seq: &Sequence,
    cfg: &PipelineConfig,
    out_dir: &Path,
    road_mask_dir: Option<&Path>,
    dump_grid: bool,
) -> Result<String> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        action: "create directory",
        path: out_dir.to_path_buf(),
        source,
    })?;
    let grid_dir = out_dir.join("grid");
    if dump_grid {
        fs::create_dir_all(&grid_dir).map_err(|source| Error::Io {
            action: "create directory",
            path: grid_dir.clone(),
            source,
        })?;
    }
    let ghosts_path = out_dir.join("ghosts.jsonl");
    let mut ghosts_file = fs::File::create(&ghosts_path).map_err(|source| Error::Io {
        action: "create",
        path: ghosts_path.clone(),
        source,
    })?;

    let inputs = seq.frames.iter().enumerate().map(|(k, (id, path))| {
        let mut scan = load_scan(path)?;
        scan.t = *id;
        let road_mask = match road_mask_dir {
            Some(dir) => Some(load_road_mask(dir, *id)?),
            None => None,
        };
        Ok(FrameInput {
            scan,
            boxes: seq.boxes_by_frame.get(id).cloned().unwrap_or_default(),
            pose: seq.poses.as_ref().map(|p| p[k].clone()),
            road_mask,
        })
    });

    let summary = run_sequence(inputs, cfg, |input, result| {
        let t = input.scan.t;
        save_labels(&out_dir.join(format!("{t:06}.label")), &result.labels)?;
        for g in &result.ghosts {
            let line = serde_json::json!({
                "frame": t,
                "box_index": g.box_index,
                "confidence": g.confidence,
                "points_inside": g.points_inside,
                "gas_inside": g.gas_inside,
                "is_ghost": g.is_ghost,
            });
            writeln!(ghosts_file, "{line}").map_err(|source| Error::Io {
                action: "write",
                path: ghosts_path.clone(),
                source,
            })?;
        }
        if dump_grid {
            if let Some(grid) = &result.grid {
                let path = grid_dir.join(format!("{t:06}.pgm"));
                fs::write(&path, grid.to_pgm()).map_err(|source| Error::Io {
                    action: "write",
                    path,
                    source,
                })?;
            }
        }
        Ok(())
    })?;

    Ok(format!(
        "{}: {} frames, {} points, {} exhaust points, {} ghost flags ({:.2}s)",
        seq.dir.display(),
        summary.frames,
        summary.points,
        summary.gas_points,
        summary.ghost_flags,
        summary.elapsed.as_secs_f64()
    ))
}

fn build_config(args: &DetectArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &args.config {
        cfg.load_file(path)?;
    }
    let overrides: Vec<&str> = args.set.iter().map(|s| s.as_str()).collect();
    cfg.apply_overrides(&overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Output directory for one sequence of a run: the out dir itself for a
/// single sequence, a subdirectory named after the sequence otherwise.
fn out_dir_for(args: &DetectArgs, seq_dir: &Path) -> Result<PathBuf> {
    if args.seqs.len() == 1 {
        return Ok(args.out.clone());
    }
    let name = seq_dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| manifest_err(seq_dir, "sequence path has no usable name"))?;
    Ok(args.out.join(name))
}

fn cmd_detect(args: &DetectArgs, ghost_mode: bool) -> Result<()> {
    let mut cfg = build_config(args)?;
    if ghost_mode {
        // Boxes under audit must not veto their own contents.
        cfg.exclude_box_points = false;
    }

    // Validate everything up front, including output name collisions.
    let mut work: Vec<(Sequence, PathBuf)> = Vec::new();
    for seq_dir in &args.seqs {
        let seq = load_sequence(seq_dir)?;
        let out_dir = out_dir_for(args, seq_dir)?;
        if work.iter().any(|(_, existing)| *existing == out_dir) {
            return Err(manifest_err(
                seq_dir,
                format!("output directory {} used twice", out_dir.display()),
            ));
        }
        work.push((seq, out_dir));
    }

    let jobs = args.jobs.max(1).min(work.len().max(1));
    let road_mask_dir = args.road_mask.as_deref();
    let mut summaries: Vec<Option<Result<String>>> = Vec::new();
    summaries.resize_with(work.len(), || None);
    let chunk_size = work.len().max(1).div_ceil(jobs);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (chunk_id, chunk) in work.chunks(chunk_size).enumerate() {
            let cfg = &cfg;
            let chunk_start = chunk_id * chunk_size;
            handles.push(scope.spawn(move || {
                let mut results = Vec::new();
                for (seq, out_dir) in chunk {
                    results.push(run_one_sequence(
                        seq,
                        cfg,
                        out_dir,
                        road_mask_dir,
                        args.dump_grid,
                    ));
                }
                (chunk_start, results)
            }));
        }
        for handle in handles {
            let (start, results) = handle.join().expect("worker thread panicked");
            for (k, r) in results.into_iter().enumerate() {
                summaries[start + k] = Some(r);
            }
        }
    });
    for summary in summaries.into_iter().flatten() {
        println!("{}", summary?);
    }
    Ok(())
}

/// Locate the ground-truth label file for a frame stem: either directly in
/// the given directory or in its labels/ subdirectory.
fn gt_label_path(gt: &Path, stem: &str) -> Result<PathBuf> {
    let candidates = [
        gt.join("labels").join(format!("{stem}.label")),
        gt.join(format!("{stem}.label")),
    ];
    candidates
        .iter()
        .find(|p| p.is_file())
        .cloned()
        .ok_or_else(|| manifest_err(gt, format!("no ground-truth labels for frame {stem}")))
}

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn metrics_row(name: &str, c: &ConfusionCounts) -> String {
    format!(
        "{:<12} {:>9} {:>9} {:>9} {:>10} {:>9}",
        name,
        percent(c.precision()),
        percent(c.recall()),
        percent(c.iou_gas()),
        percent(c.iou_other()),
        percent(c.miou())
    )
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut stems: Vec<String> = Vec::new();
    let entries = fs::read_dir(&args.pred).map_err(|source| Error::Io {
        action: "list",
        path: args.pred.clone(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            action: "list",
            path: args.pred.clone(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("label") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    if stems.is_empty() {
        return Err(manifest_err(&args.pred, "no .label files to evaluate"));
    }
    stems.sort();

    println!(
        "{:<12} {:>9} {:>9} {:>9} {:>10} {:>9}",
        "frame", "precision", "recall", "iou_gas", "iou_other", "miou"
    );
    let mut total = ConfusionCounts::default();
    for stem in &stems {
        let pred = load_labels_raw(&args.pred.join(format!("{stem}.label")))?;
        let gt = load_labels_raw(&gt_label_path(&args.gt, stem)?)?;
        if pred.len() != gt.len() {
            return Err(Error::LabelLength {
                expected: gt.len(),
                got: pred.len(),
            });
        }
        let c = confusion(&pred, &gt, !args.include_road);
        if args.records {
            println!("{}", metrics_row(stem, &c));
        }
        total.merge(&c);
    }
    println!("{}", metrics_row("total", &total));
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut spec = match (&args.source.preset, &args.source.spec) {
        (Some(name), None) => ScenarioSpec::preset(name)
            .ok_or_else(|| Error::Invalid(format!("unknown preset `{name}`")))?,
        (None, Some(path)) => ScenarioSpec::from_json_file(path)?,
        _ => unreachable!("clap enforces exactly one source"),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(frames) = args.frames {
        spec.frames = frames;
    }
    let summary = generate(&spec, &args.out)?;
    println!(
        "{}: wrote {} frames ({} points) to {}",
        spec.name,
        summary.frames,
        summary.points,
        args.out.display()
    );
    Ok(())
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Detect(args) => cmd_detect(args, false),
        Command::Ghost(args) => cmd_detect(args, true),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_parses() {
        let cli = Cli::try_parse_from([
            "exhaust",
            "detect",
            "--seq",
            "a",
            "--seq",
            "b",
            "--out",
            "o",
            "--set",
            "sphere_radius_m=2.5",
            "--dump-grid",
            "--jobs",
            "2",
        ])
        .unwrap();
        match cli.command {
            Command::Detect(args) => {
                assert_eq!(args.seqs.len(), 2);
                assert!(args.dump_grid);
                assert_eq!(args.jobs, 2);
                assert_eq!(args.set, vec!["sphere_radius_m=2.5"]);
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn synth_requires_exactly_one_source() {
        assert!(Cli::try_parse_from(["exhaust", "synth", "--out", "o"]).is_err());
        assert!(Cli::try_parse_from([
            "exhaust", "synth", "--preset", "idle", "--spec", "s.json", "--out", "o"
        ])
        .is_err());
        assert!(
            Cli::try_parse_from(["exhaust", "synth", "--preset", "idle", "--out", "o"]).is_ok()
        );
    }

    #[test]
    fn missing_pieces_fail_sequence_validation() {
        let dir = tempfile::tempdir().unwrap();
        // No scans directory at all.
        assert!(matches!(
            load_sequence(dir.path()),
            Err(Error::Manifest { .. })
        ));

        // Scans but no boxes.jsonl.
        fs::create_dir_all(dir.path().join("scans")).unwrap();
        assert!(matches!(
            load_sequence(dir.path()),
            Err(Error::Manifest { .. })
        ));

        // Empty sequence is fine once boxes.jsonl exists.
        fs::write(dir.path().join("boxes.jsonl"), b"").unwrap();
        let seq = load_sequence(dir.path()).unwrap();
        assert!(seq.frames.is_empty());
    }

    #[test]
    fn non_contiguous_frames_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("scans")).unwrap();
        fs::write(dir.path().join("boxes.jsonl"), b"").unwrap();
        fs::write(dir.path().join("scans/000000.bin"), b"").unwrap();
        fs::write(dir.path().join("scans/000002.bin"), b"").unwrap();
        let err = load_sequence(dir.path()).unwrap_err();
        assert!(err.to_string().contains("not contiguous"), "{err}");
    }

    #[test]
    fn named_scan_files_must_be_frame_numbers() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("scans")).unwrap();
        fs::write(dir.path().join("boxes.jsonl"), b"").unwrap();
        fs::write(dir.path().join("scans/frame_one.bin"), b"").unwrap();
        assert!(load_sequence(dir.path()).is_err());
    }

    #[test]
    fn percent_formatting_uses_two_decimals() {
        assert_eq!(percent(1.0), "100.00%");
        assert_eq!(percent(0.12345), "12.35%");
        assert_eq!(percent(0.0), "0.00%");
    }
}
