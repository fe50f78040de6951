//! Seeded synthetic world and detector that replays the five
//! reproducibility experiments.
//!
//! Every random draw comes from an [`RngStream`](crate::RngStream) labeled by
//! what it generates (`world`, `field`, `<experiment>/<group>/run:<r>`, then
//! `scene:<id>` below that), so results never depend on evaluation order.

pub mod config;
mod detector;
pub mod experiments;
mod field;
mod world;

pub use config::SimConfig;
pub use detector::{gen_detections, simulate_run, to_detections, DetectorParams};
pub use experiments::{Analysis, Experiment, ExperimentId, RunOutput, RunSpec, RunSummary};
pub use field::{LearningCurve, PerformanceField};
pub use world::{gen_world, SyntheticWorld};
