//! Per-region detection accuracy ("replicability maps") and the statistics
//! used to judge whether a geospatial detector's results reproduce across
//! runs and replicate across locations.
//!
//! The crate is `no_std` with `alloc`. Transcendental functions go through
//! [`libm`] so that every result is bit-identical across platforms; file IO,
//! the command line and parallel execution live in the `georep` crate.
//!
//! * [`geomodel`]: coordinates, scenes, boxes, the seeded [`RngStream`] and
//!   spherical cell areas.
//! * [`partition`]: grid and strip partitions of the sphere, scene assignment.
//! * [`deteval`]: IoU matching, all-points AP and per-region mAP50.
//! * [`spatialstats`]: contiguity weights and Moran's I permutation tests.
//! * [`hypotest`]: paired t, Levene, Pearson and the CDFs they need.
//! * [`simulator`]: a seeded synthetic world and detector that replays the
//!   five reproducibility experiments.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod deteval;
mod error;
pub mod geomodel;
pub mod hypotest;
pub mod partition;
pub mod simulator;
pub mod spatialstats;

pub use error::{Error, Result};
pub use geomodel::RngStream;

/// Version tag written into every output file.
pub const FORMAT_VERSION: u32 = 1;
