//! Detection of condensed vehicle exhaust clouds in LiDAR point clouds.
//!
//! Cold weather makes exhaust condense into dense clouds that LiDAR sees
//! as solid-looking obstacles. This crate labels those points in two
//! stages. The first stage looks for faint, elevated returns inside a
//! sphere behind each vehicle's rear face, cleaning the result with a
//! pillar-grid rule that rejects bright or ground-hugging columns. The
//! second stage remembers every detected cloud for a bounded number of
//! frames and projects the remembered footprints into a 2D likelihood
//! grid, so clouds that outlive their emitter — a car that has driven
//! away — keep being recognized even with no vehicle nearby.
//!
//! On top of the detector the crate provides point-wise evaluation
//! metrics, a ghost audit that flags detector boxes resting on exhaust
//! rather than on an object, a deterministic synthetic scene generator
//! for end-to-end experiments, and a command-line interface over
//! sequence directories.

pub mod cli;
pub mod clustering;
pub mod config;
pub mod error;
pub mod ground;
pub mod io;
mod mat2;
pub mod memory;
pub mod metrics;
pub mod pipeline;
pub mod proximity;
pub mod rng;
pub mod scan;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use memory::DetectionHistory;
pub use pipeline::{detect_ghosts, process_frame, run_sequence, FrameInput, FrameResult};
pub use scan::{BoundingBox3D, BoxClass, Point, Pose, Scan, SemanticLabel};
