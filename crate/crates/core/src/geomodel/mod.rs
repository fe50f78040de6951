//! Geographic and detection data types.
//!
//! Scene coordinates are the scene *center*. Longitude is stored in
//! `[0, 360)`, latitude in signed degrees `[-90, 90]`.

mod area;
mod rng;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

pub use area::{spherical_cell_area, sphere_area};
pub use rng::{hash64, RngStream};

/// Mean radius of Mars, the default for area computations.
pub const MARS_RADIUS_KM: f64 = 3389.5;
pub const DEFAULT_SCENE_PX: u32 = 256;
pub const DEFAULT_GSD_M: f64 = 100.0;
pub const MIN_DIAMETER_KM: f64 = 0.2;
pub const MAX_DIAMETER_KM: f64 = 25.5;

/// Maps any finite longitude into `[0, 360)`.
pub fn normalize_lon(lon_deg: f64) -> f64 {
    let mut r = lon_deg % 360.0;
    if r < 0.0 {
        r += 360.0;
    }
    // -1e-20 % 360 + 360 rounds to 360
    if r >= 360.0 {
        r = 0.0;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lon_deg: f64,
    lat_deg: f64,
}

impl GeoPoint {
    pub fn new(lon_deg: f64, lat_deg: f64) -> Result<Self> {
        if !lon_deg.is_finite() || !lat_deg.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite coordinate ({lon_deg}, {lat_deg})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(Error::Domain(format!("latitude {lat_deg} outside [-90, 90]")));
        }
        Ok(GeoPoint {
            lon_deg: normalize_lon(lon_deg),
            lat_deg,
        })
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }
}

/// A geo-referenced image scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecord {
    pub scene_id: String,
    pub center: GeoPoint,
    pub width_px: u32,
    pub height_px: u32,
    pub gsd_m: f64,
}

impl SceneRecord {
    pub fn new(
        scene_id: impl Into<String>,
        center: GeoPoint,
        width_px: u32,
        height_px: u32,
        gsd_m: f64,
    ) -> Result<Self> {
        let scene_id = scene_id.into();
        if scene_id.is_empty() {
            return Err(Error::validation("<empty>", "scene_id must not be empty"));
        }
        if width_px == 0 || height_px == 0 {
            return Err(Error::validation(scene_id, "pixel dimensions must be positive"));
        }
        if !(gsd_m.is_finite() && gsd_m > 0.0) {
            return Err(Error::validation(scene_id, format!("gsd_m {gsd_m} must be positive")));
        }
        Ok(SceneRecord {
            scene_id,
            center,
            width_px,
            height_px,
            gsd_m,
        })
    }

    /// A scene with the default 256 x 256 px, 100 m/px geometry.
    pub fn with_defaults(scene_id: impl Into<String>, center: GeoPoint) -> Result<Self> {
        Self::new(scene_id, center, DEFAULT_SCENE_PX, DEFAULT_SCENE_PX, DEFAULT_GSD_M)
    }

    pub fn width_km(&self) -> f64 {
        self.width_px as f64 * self.gsd_m / 1000.0
    }

    pub fn height_km(&self) -> f64 {
        self.height_px as f64 * self.gsd_m / 1000.0
    }
}

/// An ordered set of scenes with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneSet {
    scenes: Vec<SceneRecord>,
    index: BTreeMap<String, usize>,
}

impl SceneSet {
    pub fn new(scenes: Vec<SceneRecord>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, s) in scenes.iter().enumerate() {
            if index.insert(s.scene_id.clone(), i).is_some() {
                return Err(Error::validation(s.scene_id.clone(), "duplicate scene_id"));
            }
        }
        Ok(SceneSet { scenes, index })
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn scenes(&self) -> &[SceneRecord] {
        &self.scenes
    }

    pub fn iter(&self) -> core::slice::Iter<'_, SceneRecord> {
        self.scenes.iter()
    }

    pub fn index_of(&self, scene_id: &str) -> Option<usize> {
        self.index.get(scene_id).copied()
    }

    pub fn get(&self, scene_id: &str) -> Option<&SceneRecord> {
        self.index_of(scene_id).map(|i| &self.scenes[i])
    }
}

/// Pixel-space box: top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::Domain(format!("non-finite box [{x}, {y}, {w}, {h}]")));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::Domain(format!("box extent must be positive, got w={w} h={h}")));
        }
        Ok(BBox { x, y, w, h })
    }

    pub fn x1(&self) -> f64 {
        self.x + self.w
    }

    pub fn y1(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Clips to `[0, width] x [0, height]`; `None` when nothing is left.
    pub fn clip(&self, width: f64, height: f64) -> Option<BBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.x1().min(width);
        let y1 = self.y1().min(height);
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        // keep untouched edges bit-exact
        let w = if x0 == self.x && x1 == self.x1() { self.w } else { x1 - x0 };
        let h = if y0 == self.y && y1 == self.y1() { self.h } else { y1 - y0 };
        Some(BBox { x: x0, y: y0, w, h })
    }

    fn clip_to_scene(&self, scene: &SceneRecord, record: &str) -> Result<BBox> {
        self.clip(scene.width_px as f64, scene.height_px as f64)
            .ok_or_else(|| {
                Error::validation(
                    record,
                    format!("box lies entirely outside scene {}", scene.scene_id),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub scene_id: String,
    pub bbox: BBox,
    pub diameter_km: Option<f64>,
}

impl GroundTruthBox {
    /// Validates a raw annotation against `scenes`: the scene must exist, the
    /// diameter must lie in `[0.2, 25.5]` km and the box is clipped to the
    /// scene. `record` names the record in error messages.
    pub fn validated(
        scenes: &SceneSet,
        scene_id: &str,
        bbox: [f64; 4],
        diameter_km: Option<f64>,
        record: &str,
    ) -> Result<Self> {
        let scene = scenes
            .get(scene_id)
            .ok_or_else(|| Error::UnknownScene(format!("{record}: {scene_id}")))?;
        if let Some(d) = diameter_km {
            if !(MIN_DIAMETER_KM..=MAX_DIAMETER_KM).contains(&d) {
                return Err(Error::validation(
                    record,
                    format!("diameter_km {d} outside [{MIN_DIAMETER_KM}, {MAX_DIAMETER_KM}]"),
                ));
            }
        }
        let raw = BBox::new(bbox[0], bbox[1], bbox[2], bbox[3])
            .map_err(|e| Error::validation(record, format!("{e}")))?;
        Ok(GroundTruthBox {
            scene_id: scene.scene_id.clone(),
            bbox: raw.clip_to_scene(scene, record)?,
            diameter_km,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub scene_id: String,
    pub bbox: BBox,
    pub score: f64,
}

impl Detection {
    /// Same checks as [`GroundTruthBox::validated`] plus `score` in `[0, 1]`.
    pub fn validated(
        scenes: &SceneSet,
        scene_id: &str,
        bbox: [f64; 4],
        score: f64,
        record: &str,
    ) -> Result<Self> {
        let scene = scenes
            .get(scene_id)
            .ok_or_else(|| Error::UnknownScene(format!("{record}: {scene_id}")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::validation(record, format!("score {score} outside [0, 1]")));
        }
        let raw = BBox::new(bbox[0], bbox[1], bbox[2], bbox[3])
            .map_err(|e| Error::validation(record, format!("{e}")))?;
        Ok(Detection {
            scene_id: scene.scene_id.clone(),
            bbox: raw.clip_to_scene(scene, record)?,
            score,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn one_scene() -> SceneSet {
        let s = SceneRecord::with_defaults("s1", GeoPoint::new(15.0, 5.0).unwrap()).unwrap();
        SceneSet::new(vec![s]).unwrap()
    }

    #[test]
    fn longitude_normalization() {
        assert_eq!(normalize_lon(-165.0), 195.0);
        assert_eq!(normalize_lon(360.0), 0.0);
        assert_eq!(normalize_lon(725.0), 5.0);
        assert_eq!(normalize_lon(-1e-20), 0.0);
        assert_eq!(GeoPoint::new(-180.0, 0.0).unwrap().lon_deg(), 180.0);
    }

    #[test]
    fn latitude_out_of_range_rejected() {
        assert!(GeoPoint::new(0.0, 91.0).is_err());
        assert!(GeoPoint::new(0.0, -90.5).is_err());
        assert!(GeoPoint::new(0.0, 90.0).is_ok());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn default_scene_is_25_6_km() {
        let set = one_scene();
        let s = &set.scenes()[0];
        assert_eq!(s.width_km(), 25.6);
        assert_eq!(s.height_km(), 25.6);
    }

    #[test]
    fn duplicate_scene_ids_rejected() {
        let p = GeoPoint::new(0.0, 0.0).unwrap();
        let a = SceneRecord::with_defaults("s1", p).unwrap();
        let err = SceneSet::new(vec![a.clone(), a]).unwrap_err();
        assert!(matches!(err, Error::Validation { ref record, .. } if record == "s1"));
    }

    #[test]
    fn box_inside_scene_unchanged() {
        let scenes = one_scene();
        let g = GroundTruthBox::validated(&scenes, "s1", [10.0, 20.0, 30.0, 40.0], None, "#0")
            .unwrap();
        assert_eq!(g.bbox, BBox::new(10.0, 20.0, 30.0, 40.0).unwrap());
    }

    #[test]
    fn box_clipped_at_scene_edge() {
        let scenes = one_scene();
        let g = GroundTruthBox::validated(&scenes, "s1", [250.0, 0.0, 20.0, 10.0], None, "#0")
            .unwrap();
        assert_eq!(g.bbox.x, 250.0);
        assert_eq!(g.bbox.w, 6.0);
        let g = GroundTruthBox::validated(&scenes, "s1", [-5.0, -2.0, 10.0, 10.0], None, "#1")
            .unwrap();
        assert_eq!((g.bbox.x, g.bbox.y, g.bbox.w, g.bbox.h), (0.0, 0.0, 5.0, 8.0));
    }

    #[test]
    fn box_outside_scene_rejected() {
        let scenes = one_scene();
        let err = GroundTruthBox::validated(&scenes, "s1", [300.0, 0.0, 5.0, 5.0], None, "#3")
            .unwrap_err();
        assert_eq!(err.name(), "ValidationError");
    }

    #[test]
    fn diameter_range_enforced() {
        let scenes = one_scene();
        let b = [0.0, 0.0, 5.0, 5.0];
        assert!(GroundTruthBox::validated(&scenes, "s1", b, Some(30.0), "#0").is_err());
        assert!(GroundTruthBox::validated(&scenes, "s1", b, Some(0.1), "#0").is_err());
        assert!(GroundTruthBox::validated(&scenes, "s1", b, Some(0.2), "#0").is_ok());
        assert!(GroundTruthBox::validated(&scenes, "s1", b, Some(25.5), "#0").is_ok());
    }

    #[test]
    fn unknown_scene_and_bad_score() {
        let scenes = one_scene();
        let b = [0.0, 0.0, 5.0, 5.0];
        let err = Detection::validated(&scenes, "nope", b, 0.5, "#0").unwrap_err();
        assert_eq!(err.name(), "UnknownScene");
        assert!(Detection::validated(&scenes, "s1", b, 1.5, "#0").is_err());
        assert!(Detection::validated(&scenes, "s1", [0.0, 0.0, 0.0, 5.0], 0.5, "#0").is_err());
    }
}
