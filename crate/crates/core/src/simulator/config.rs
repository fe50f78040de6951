//! Simulator configuration. Every default lives here; a JSON config file only
//! needs the keys it overrides.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub format_version: u32,
    pub world: WorldConfig,
    pub field: FieldConfig,
    pub curve: CurveConfig,
    pub detector: DetectorConfig,
    pub exp1: Exp1Config,
    pub exp2: Exp2Config,
    pub exp3: Exp3Config,
    pub exp4: StripExpConfig,
    pub exp5: StripExpConfig,
    pub stats: StatsConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            format_version: crate::FORMAT_VERSION,
            world: WorldConfig::default(),
            field: FieldConfig::default(),
            curve: CurveConfig::default(),
            detector: DetectorConfig::default(),
            exp1: Exp1Config::default(),
            exp2: Exp2Config::default(),
            exp3: Exp3Config::default(),
            exp4: StripExpConfig::latitude(),
            exp5: StripExpConfig::longitude(),
            stats: StatsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub n_scenes: usize,
    /// Poisson mean of craters per scene.
    pub craters_per_scene: f64,
    pub scene_px: u32,
    pub gsd_m: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_scenes: 5000,
            craters_per_scene: 8.0,
            scene_px: crate::geomodel::DEFAULT_SCENE_PX,
            gsd_m: crate::geomodel::DEFAULT_GSD_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub base: f64,
    /// Quality lost at the poles, applied as `lat_gradient * |lat| / 90`.
    pub lat_gradient: f64,
    /// Highest spherical-harmonic degree of the smooth component.
    pub sh_degree: u32,
    /// Standard deviation of the smooth component over the sphere.
    pub smooth_amplitude: f64,
    /// Half-range of the piecewise-constant 20-degree longitude blocks.
    pub lon_patchiness: f64,
    pub lon_block_deg: u32,
    /// Per-scene Gaussian noise on the detection probability.
    pub noise_sd: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            base: 0.95,
            lat_gradient: 0.5,
            sh_degree: 4,
            smooth_amplitude: 0.03,
            lon_patchiness: 0.05,
            lon_block_deg: 20,
            noise_sd: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub q0: f64,
    pub q_inf: f64,
    pub tau: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            q0: 0.7,
            q_inf: 0.9,
            tau: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub jitter_px: f64,
    /// False positives per scene are Poisson(`fp_rate * (1 - p)`).
    pub fp_rate: f64,
    /// Run-level offset on the detection probability (training variance).
    pub run_noise_sd: f64,
    pub iou_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            jitter_px: 3.0,
            fp_rate: 0.5,
            run_noise_sd: 0.005,
            iou_threshold: crate::deteval::DEFAULT_IOU_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp1Config {
    pub sizes: Vec<u32>,
    pub replicates: usize,
}

impl Default for Exp1Config {
    fn default() -> Self {
        Exp1Config {
            sizes: vec![100, 200, 400, 800, 1200, 1600, 2000, 2400, 2800],
            replicates: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp2Config {
    pub train_size: u32,
    /// Runs per group.
    pub runs: usize,
    pub low_noise_sd: f64,
    pub high_noise_sd: f64,
}

impl Default for Exp2Config {
    fn default() -> Self {
        Exp2Config {
            train_size: 2000,
            runs: 20,
            low_noise_sd: 0.002,
            high_noise_sd: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exp3Config {
    pub train_size: u32,
    pub cell_deg: u32,
}

impl Default for Exp3Config {
    fn default() -> Self {
        Exp3Config {
            train_size: 2000,
            cell_deg: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StripExpConfig {
    pub train_size: u32,
    pub strip_deg: u32,
    /// `[lo, hi]` bounds of each training strip; each must be a strip.
    pub train_strips: Vec<[f64; 2]>,
    /// Decay length of the proximity multiplier `exp(-d / decay_deg)`.
    pub decay_deg: f64,
    /// Multiplier on the field's longitude patchiness.
    pub patchiness_scale: f64,
    pub include_training_strip: bool,
}

impl StripExpConfig {
    pub fn latitude() -> Self {
        StripExpConfig {
            train_size: 2000,
            strip_deg: 10,
            train_strips: vec![[60.0, 70.0], [0.0, 10.0], [-40.0, -30.0]],
            decay_deg: 40.0,
            patchiness_scale: 1.0,
            include_training_strip: true,
        }
    }

    pub fn longitude() -> Self {
        StripExpConfig {
            train_size: 2000,
            strip_deg: 20,
            train_strips: vec![[100.0, 120.0], [200.0, 220.0]],
            decay_deg: 1000.0,
            patchiness_scale: 3.0,
            include_training_strip: true,
        }
    }
}

impl Default for StripExpConfig {
    fn default() -> Self {
        Self::latitude()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub n_perm: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            n_perm: crate::spatialstats::DEFAULT_PERMUTATIONS,
        }
    }
}

fn check(ok: bool, pointer: &str, reason: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(pointer, reason))
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl SimConfig {
    /// Range checks; errors carry a JSON pointer to the offending key.
    pub fn validate(&self) -> Result<()> {
        check(
            self.format_version == crate::FORMAT_VERSION,
            "/format_version",
            format!("unsupported version {}", self.format_version),
        )?;
        let w = &self.world;
        check(w.n_scenes >= 1, "/world/n_scenes", "must be >= 1")?;
        check(
            w.craters_per_scene.is_finite() && w.craters_per_scene > 0.0,
            "/world/craters_per_scene",
            "must be positive",
        )?;
        check(w.scene_px >= 1, "/world/scene_px", "must be >= 1")?;
        check(w.gsd_m.is_finite() && w.gsd_m > 0.0, "/world/gsd_m", "must be positive")?;

        let f = &self.field;
        check(unit(f.base), "/field/base", "must lie in [0, 1]")?;
        check(nonneg(f.lat_gradient), "/field/lat_gradient", "must be >= 0")?;
        check(f.sh_degree <= 32, "/field/sh_degree", "must be <= 32")?;
        check(nonneg(f.smooth_amplitude), "/field/smooth_amplitude", "must be >= 0")?;
        check(nonneg(f.lon_patchiness), "/field/lon_patchiness", "must be >= 0")?;
        check(
            f.lon_block_deg > 0 && 360 % f.lon_block_deg == 0,
            "/field/lon_block_deg",
            "must divide 360",
        )?;
        check(nonneg(f.noise_sd), "/field/noise_sd", "must be >= 0")?;

        let c = &self.curve;
        check(c.q0.is_finite() && c.q0 >= 0.0, "/curve/q0", "must be >= 0")?;
        check(c.q_inf.is_finite() && c.q_inf > c.q0, "/curve/q_inf", "must exceed q0")?;
        check(c.tau.is_finite() && c.tau > 0.0, "/curve/tau", "must be positive")?;

        let d = &self.detector;
        check(nonneg(d.jitter_px), "/detector/jitter_px", "must be >= 0")?;
        check(nonneg(d.fp_rate), "/detector/fp_rate", "must be >= 0")?;
        check(nonneg(d.run_noise_sd), "/detector/run_noise_sd", "must be >= 0")?;
        check(
            d.iou_threshold > 0.0 && d.iou_threshold <= 1.0,
            "/detector/iou_threshold",
            "must lie in (0, 1]",
        )?;

        check(!self.exp1.sizes.is_empty(), "/exp1/sizes", "must not be empty")?;
        for (i, &n) in self.exp1.sizes.iter().enumerate() {
            check(n >= 1, &format!("/exp1/sizes/{i}"), "must be >= 1")?;
        }
        check(self.exp1.replicates >= 2, "/exp1/replicates", "must be >= 2")?;

        let e2 = &self.exp2;
        check(e2.train_size >= 1, "/exp2/train_size", "must be >= 1")?;
        check(e2.runs >= 2, "/exp2/runs", "must be >= 2")?;
        check(nonneg(e2.low_noise_sd), "/exp2/low_noise_sd", "must be >= 0")?;
        check(nonneg(e2.high_noise_sd), "/exp2/high_noise_sd", "must be >= 0")?;

        check(self.exp3.train_size >= 1, "/exp3/train_size", "must be >= 1")?;
        check(
            self.exp3.cell_deg > 0 && 180 % self.exp3.cell_deg == 0,
            "/exp3/cell_deg",
            "must divide 180",
        )?;

        for (name, e, span) in [("exp4", &self.exp4, 180u32), ("exp5", &self.exp5, 360)] {
            check(e.train_size >= 1, &format!("/{name}/train_size"), "must be >= 1")?;
            check(
                e.strip_deg > 0 && span % e.strip_deg == 0,
                &format!("/{name}/strip_deg"),
                format!("must divide {span}"),
            )?;
            check(
                e.decay_deg.is_finite() && e.decay_deg > 0.0,
                &format!("/{name}/decay_deg"),
                "must be positive",
            )?;
            check(
                nonneg(e.patchiness_scale),
                &format!("/{name}/patchiness_scale"),
                "must be >= 0",
            )?;
            check(
                !e.train_strips.is_empty(),
                &format!("/{name}/train_strips"),
                "must not be empty",
            )?;
        }
        check(self.stats.n_perm >= 2, "/stats/n_perm", "must be >= 2")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn paper_experiment_defaults() {
        let c = SimConfig::default();
        assert_eq!(c.exp1.sizes, [100, 200, 400, 800, 1200, 1600, 2000, 2400, 2800]);
        assert_eq!(c.exp1.replicates, 10);
        assert_eq!(c.exp2.runs, 20);
        assert_eq!(c.exp4.train_strips, [[60.0, 70.0], [0.0, 10.0], [-40.0, -30.0]]);
        assert_eq!(c.exp5.train_strips, [[100.0, 120.0], [200.0, 220.0]]);
        assert_eq!((c.exp4.strip_deg, c.exp5.strip_deg), (10, 20));
        assert_eq!(c.stats.n_perm, 999);
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = SimConfig::default();
        c.curve.q_inf = 0.5;
        assert_eq!(
            c.validate().unwrap_err(),
            Error::Config {
                pointer: "/curve/q_inf".into(),
                reason: "must exceed q0".into()
            }
        );
        let mut c = SimConfig::default();
        c.exp5.strip_deg = 7;
        assert!(matches!(c.validate(), Err(Error::Config { pointer, .. }) if pointer == "/exp5/strip_deg"));
        let mut c = SimConfig::default();
        c.exp1.sizes[3] = 0;
        assert!(matches!(c.validate(), Err(Error::Config { pointer, .. }) if pointer == "/exp1/sizes/3"));
    }
}
