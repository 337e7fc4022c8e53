//! Pipeline configuration.
//!
//! All tunables live in one flat struct so that a config file (plain
//! `key = value` lines) and `--set key=value` command-line overrides can
//! share a single parser.

use std::path::Path;

use crate::error::{Error, Result};

/// Tunable parameters of the detection pipeline.
///
/// Defaults correspond to a sequential 10-20 Hz automotive sensor with
/// reflectivity normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Full-scale reflectivity of the sensor.
    pub r_max: f64,
    /// Radius in meters of the sphere behind each vehicle that seeds
    /// proximity detection. 2 m suits sequential data; 3 m compensates for
    /// stale boxes on non-sequential data.
    pub sphere_radius_m: f64,
    /// Reflectivity threshold for the label correction, as a fraction of
    /// `r_max`. Pillars at or above it are not exhaust.
    pub reflectivity_threshold_frac: f64,
    /// Minimum clearance above ground for an exhaust pillar, meters.
    pub ground_clearance_min_m: f64,
    /// Pillar cell sizes for label correction, meters.
    pub pillar_dx_m: f64,
    pub pillar_dy_m: f64,
    /// Apply the reflectivity/clearance label correction.
    pub label_correction_enabled: bool,

    /// Single-linkage clustering distance, meters.
    pub cluster_eps_m: f64,
    /// Minimum cluster size; smaller groups are dropped as noise.
    pub cluster_min_pts: usize,
    /// Covariance regularization floor, meters (standard deviation).
    pub sigma_min_m: f64,

    /// Detections live for this many time steps.
    pub history_ttl_steps: u32,
    /// Side length of the square likelihood grid, centered on the ego.
    pub grid_extent_m: f64,
    /// Likelihood grid cell sizes, meters.
    pub grid_dx_m: f64,
    pub grid_dy_m: f64,
    /// Run the second stage (isolated clouds via the likelihood grid).
    pub isolated_stage_enabled: bool,
    /// Feed second-stage detections back into the history.
    pub second_stage_memory_save_enabled: bool,

    /// Enlargement applied to detector boxes (those carrying a score);
    /// ground-truth boxes are used as-is.
    pub box_margin_m: f64,
    /// Exclude points inside bounding boxes from the working cloud. The
    /// ghost audit disables this so that a box's own content can be judged.
    pub exclude_box_points: bool,
    /// Detector boxes above this score are checked by the ghost rule.
    pub ghost_conf_thresh: f64,

    /// Ground grid cell size, meters.
    pub ground_cell_m: f64,
    /// Road tolerance above the per-cell ground minimum, meters.
    pub ground_tol_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            r_max: 1.0,
            sphere_radius_m: 2.0,
            reflectivity_threshold_frac: 0.01,
            ground_clearance_min_m: 0.0,
            pillar_dx_m: 0.1,
            pillar_dy_m: 0.1,
            label_correction_enabled: true,
            cluster_eps_m: 1.0,
            cluster_min_pts: 3,
            sigma_min_m: 0.1,
            history_ttl_steps: 150,
            grid_extent_m: 200.0,
            grid_dx_m: 0.1,
            grid_dy_m: 0.1,
            isolated_stage_enabled: true,
            second_stage_memory_save_enabled: true,
            box_margin_m: 0.5,
            exclude_box_points: true,
            ghost_conf_thresh: 0.9,
            ground_cell_m: 1.0,
            ground_tol_m: 0.15,
        }
    }
}

impl PipelineConfig {
    /// Absolute reflectivity threshold for label correction.
    pub fn reflectivity_threshold(&self) -> f64 {
        self.reflectivity_threshold_frac * self.r_max
    }

    /// Set one key from its string form. Key names match the field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::Config {
                key: key.to_string(),
                msg: format!("cannot parse `{value}`"),
            })
        }
        match key {
            "r_max" => self.r_max = parse(key, value)?,
            "sphere_radius_m" => self.sphere_radius_m = parse(key, value)?,
            "reflectivity_threshold_frac" => self.reflectivity_threshold_frac = parse(key, value)?,
            "ground_clearance_min_m" => self.ground_clearance_min_m = parse(key, value)?,
            "pillar_dx_m" => self.pillar_dx_m = parse(key, value)?,
            "pillar_dy_m" => self.pillar_dy_m = parse(key, value)?,
            "label_correction_enabled" => self.label_correction_enabled = parse(key, value)?,
            "cluster_eps_m" => self.cluster_eps_m = parse(key, value)?,
            "cluster_min_pts" => self.cluster_min_pts = parse(key, value)?,
            "sigma_min_m" => self.sigma_min_m = parse(key, value)?,
            "history_ttl_steps" => self.history_ttl_steps = parse(key, value)?,
            "grid_extent_m" => self.grid_extent_m = parse(key, value)?,
            "grid_dx_m" => self.grid_dx_m = parse(key, value)?,
            "grid_dy_m" => self.grid_dy_m = parse(key, value)?,
            "isolated_stage_enabled" => self.isolated_stage_enabled = parse(key, value)?,
            "second_stage_memory_save_enabled" => {
                self.second_stage_memory_save_enabled = parse(key, value)?
            }
            "box_margin_m" => self.box_margin_m = parse(key, value)?,
            "exclude_box_points" => self.exclude_box_points = parse(key, value)?,
            "ghost_conf_thresh" => self.ghost_conf_thresh = parse(key, value)?,
            "ground_cell_m" => self.ground_cell_m = parse(key, value)?,
            "ground_tol_m" => self.ground_tol_m = parse(key, value)?,
            _ => return Err(Error::UnknownConfigKey(key.to_string())),
        }
        Ok(())
    }

    /// Load overrides from a flat `key = value` file. Blank lines and
    /// `#` comments are ignored.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            action: "read",
            path: path.to_path_buf(),
            source: e,
        })?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected `key = value`".to_string(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Apply `key=value` strings from the command line.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, pairs: &[S]) -> Result<()> {
        for pair in pairs {
            let pair = pair.as_ref();
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("`--set {pair}`: expected key=value")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Reject configurations that cannot run.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_max", self.r_max),
            ("sphere_radius_m", self.sphere_radius_m),
            ("pillar_dx_m", self.pillar_dx_m),
            ("pillar_dy_m", self.pillar_dy_m),
            ("cluster_eps_m", self.cluster_eps_m),
            ("sigma_min_m", self.sigma_min_m),
            ("grid_extent_m", self.grid_extent_m),
            ("grid_dx_m", self.grid_dx_m),
            ("grid_dy_m", self.grid_dy_m),
            ("ground_cell_m", self.ground_cell_m),
        ];
        for (key, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config {
                    key: key.to_string(),
                    msg: format!("must be positive, got {v}"),
                });
            }
        }
        if self.history_ttl_steps == 0 {
            return Err(Error::Config {
                key: "history_ttl_steps".to_string(),
                msg: "must be at least 1".to_string(),
            });
        }
        if !(0.0..=1.0).contains(&self.reflectivity_threshold_frac) {
            return Err(Error::Config {
                key: "reflectivity_threshold_frac".to_string(),
                msg: "must be within [0, 1]".to_string(),
            });
        }
        if self.box_margin_m < 0.0 || self.ground_tol_m < 0.0 {
            return Err(Error::Config {
                key: "box_margin_m/ground_tol_m".to_string(),
                msg: "must be non-negative".to_string(),
            });
        }
        Ok(())
    }
}
