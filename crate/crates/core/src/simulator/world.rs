//! Synthetic scenes and crater annotations.

use alloc::format;
use alloc::vec::Vec;

use super::config::WorldConfig;
use crate::geomodel::{
    BBox, GeoPoint, GroundTruthBox, RngStream, SceneRecord, SceneSet, MAX_DIAMETER_KM,
    MIN_DIAMETER_KM,
};
use crate::Result;

/// Scenes with their ground-truth craters, stored per scene in generation
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    scenes: SceneSet,
    boxes: Vec<Vec<BBox>>,
    diameters: Vec<Vec<f64>>,
}

/// Log-uniform crater diameter in km.
pub(crate) fn log_uniform_diameter(rng: &mut RngStream) -> f64 {
    let (lo, hi) = (libm::log(MIN_DIAMETER_KM), libm::log(MAX_DIAMETER_KM));
    libm::exp(rng.uniform_range(lo, hi)).clamp(MIN_DIAMETER_KM, MAX_DIAMETER_KM)
}

/// Square box of side `side` px placed uniformly inside a `w x h` scene.
pub(crate) fn place_box(rng: &mut RngStream, side: f64, w: f64, h: f64) -> Option<BBox> {
    let x = rng.uniform() * (w - side).max(0.0);
    let y = rng.uniform() * (h - side).max(0.0);
    BBox { x, y, w: side, h: side }.clip(w, h)
}

impl SyntheticWorld {
    /// Scene centers have latitude density proportional to `cos(lat)` and
    /// uniform longitude (stream `"world"`); scene `i` draws its craters from
    /// `"world/scene:i"`.
    pub fn generate(seed: u64, config: &WorldConfig) -> Result<Self> {
        let mut rng = RngStream::new(seed, "world");
        let n = config.n_scenes;
        let side_px = config.scene_px as f64;
        let mut scenes = Vec::with_capacity(n);
        let mut boxes = Vec::with_capacity(n);
        let mut diameters = Vec::with_capacity(n);
        for i in 0..n {
            let lat = libm::asin(rng.uniform_range(-1.0, 1.0)).to_degrees();
            let lon = rng.uniform_range(0.0, 360.0);
            let scene = SceneRecord::new(
                format!("s{i:06}"),
                GeoPoint::new(lon, lat)?,
                config.scene_px,
                config.scene_px,
                config.gsd_m,
            )?;
            let mut sub = rng.substream(&format!("scene:{i}"));
            let k = sub.poisson(config.craters_per_scene) as usize;
            let mut b = Vec::with_capacity(k);
            let mut d = Vec::with_capacity(k);
            for _ in 0..k {
                let diam = log_uniform_diameter(&mut sub);
                let side = diam * 1000.0 / config.gsd_m;
                if let Some(bb) = place_box(&mut sub, side, side_px, side_px) {
                    b.push(bb);
                    d.push(diam);
                }
            }
            scenes.push(scene);
            boxes.push(b);
            diameters.push(d);
        }
        Ok(SyntheticWorld {
            scenes: SceneSet::new(scenes)?,
            boxes,
            diameters,
        })
    }

    pub fn scenes(&self) -> &SceneSet {
        &self.scenes
    }

    /// Ground-truth boxes of scene `i`.
    pub fn boxes(&self, i: usize) -> &[BBox] {
        &self.boxes[i]
    }

    pub fn diameters(&self, i: usize) -> &[f64] {
        &self.diameters[i]
    }

    pub fn n_craters(&self) -> usize {
        self.boxes.iter().map(Vec::len).sum()
    }

    /// Annotations in scene order, then crater order.
    pub fn annotations(&self) -> Vec<GroundTruthBox> {
        let mut out = Vec::with_capacity(self.n_craters());
        for (i, scene) in self.scenes.iter().enumerate() {
            for (b, d) in self.boxes[i].iter().zip(&self.diameters[i]) {
                out.push(GroundTruthBox {
                    scene_id: scene.scene_id.clone(),
                    bbox: *b,
                    diameter_km: Some(*d),
                });
            }
        }
        out
    }
}

/// World of `n_scenes` scenes with the default geometry and crater rate.
pub fn gen_world(seed: u64, n_scenes: usize) -> Result<SyntheticWorld> {
    let config = WorldConfig {
        n_scenes,
        ..WorldConfig::default()
    };
    SyntheticWorld::generate(seed, &config)
}
