//! Manifest, annotation, detection and region files.

use std::fs;
use std::path::Path;

use georep_core::geomodel::{
    Detection, GeoPoint, GroundTruthBox, SceneRecord, SceneSet, DEFAULT_GSD_M, DEFAULT_SCENE_PX,
};
use georep_core::partition::Partition;
use georep_core::FORMAT_VERSION;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::canon::{self, num};
use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::read(path, e))
}

/// Writes canonical JSON and returns its bytes' digest.
pub fn write_json(path: &Path, v: &Value) -> Result<String> {
    write_text(path, &canon::to_string(v))
}

pub fn write_text(path: &Path, text: &str) -> Result<String> {
    fs::write(path, text).map_err(|e| Error::write(path, e))?;
    Ok(sha256_hex(text.as_bytes()))
}

fn parse_json<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        if at == "." {
            Error::parse(path, e.into_inner())
        } else {
            Error::parse(path, format!("at {at}: {}", e.into_inner()))
        }
    })
}

fn check_version(path: &Path, v: u32) -> Result<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::parse(
            path,
            format!("unsupported format_version {v}, expected {FORMAT_VERSION}"),
        ))
    }
}

fn validation(record: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Core(georep_core::Error::Validation {
        record: record.into(),
        reason: reason.into(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    format_version: u32,
    scenes: Vec<SceneEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneEntry {
    scene_id: String,
    lon_deg: f64,
    lat_deg: f64,
    #[serde(default = "default_px")]
    width_px: u32,
    #[serde(default = "default_px")]
    height_px: u32,
    #[serde(default = "default_gsd")]
    gsd_m: f64,
}

fn default_px() -> u32 {
    DEFAULT_SCENE_PX
}

fn default_gsd() -> f64 {
    DEFAULT_GSD_M
}

pub fn parse_manifest(path: &Path, bytes: &[u8]) -> Result<SceneSet> {
    let file: ManifestFile = parse_json(path, bytes)?;
    check_version(path, file.format_version)?;
    let mut scenes = Vec::with_capacity(file.scenes.len());
    for (i, s) in file.scenes.into_iter().enumerate() {
        let record = if s.scene_id.is_empty() {
            format!("scenes[{i}]")
        } else {
            s.scene_id.clone()
        };
        let center =
            GeoPoint::new(s.lon_deg, s.lat_deg).map_err(|e| validation(&record, e.to_string()))?;
        scenes.push(SceneRecord::new(s.scene_id, center, s.width_px, s.height_px, s.gsd_m)?);
    }
    Ok(SceneSet::new(scenes)?)
}

pub fn load_manifest(path: &Path) -> Result<SceneSet> {
    parse_manifest(path, &read_file(path)?)
}

pub fn manifest_json(scenes: &SceneSet) -> Value {
    let rows: Vec<Value> = scenes
        .iter()
        .map(|s| {
            json!({
                "scene_id": s.scene_id,
                "lon_deg": num(s.center.lon_deg()),
                "lat_deg": num(s.center.lat_deg()),
                "width_px": s.width_px,
                "height_px": s.height_px,
                "gsd_m": num(s.gsd_m),
            })
        })
        .collect();
    json!({"format_version": FORMAT_VERSION, "scenes": rows})
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationFile {
    format_version: u32,
    boxes: Vec<BoxEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxEntry {
    scene_id: String,
    bbox: [f64; 4],
    #[serde(default)]
    diameter_km: Option<f64>,
}

pub fn parse_annotations(path: &Path, bytes: &[u8], scenes: &SceneSet) -> Result<Vec<GroundTruthBox>> {
    let file: AnnotationFile = parse_json(path, bytes)?;
    check_version(path, file.format_version)?;
    file.boxes
        .iter()
        .enumerate()
        .map(|(i, b)| {
            GroundTruthBox::validated(scenes, &b.scene_id, b.bbox, b.diameter_km, &format!("boxes[{i}]"))
                .map_err(Error::from)
        })
        .collect()
}

pub fn load_annotations(path: &Path, scenes: &SceneSet) -> Result<Vec<GroundTruthBox>> {
    parse_annotations(path, &read_file(path)?, scenes)
}

fn bbox_json(b: &georep_core::geomodel::BBox) -> Value {
    json!([num(b.x), num(b.y), num(b.w), num(b.h)])
}

pub fn annotations_json(boxes: &[GroundTruthBox]) -> Value {
    let rows: Vec<Value> = boxes
        .iter()
        .map(|g| {
            let mut row = json!({"scene_id": g.scene_id, "bbox": bbox_json(&g.bbox)});
            if let Some(d) = g.diameter_km {
                row["diameter_km"] = num(d);
            }
            row
        })
        .collect();
    json!({"format_version": FORMAT_VERSION, "boxes": rows})
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionFile {
    format_version: u32,
    detections: Vec<DetectionEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionEntry {
    scene_id: String,
    bbox: [f64; 4],
    score: f64,
}

pub fn parse_detections(path: &Path, bytes: &[u8], scenes: &SceneSet) -> Result<Vec<Detection>> {
    let file: DetectionFile = parse_json(path, bytes)?;
    check_version(path, file.format_version)?;
    file.detections
        .iter()
        .enumerate()
        .map(|(i, d)| {
            Detection::validated(scenes, &d.scene_id, d.bbox, d.score, &format!("detections[{i}]"))
                .map_err(Error::from)
        })
        .collect()
}

pub fn load_detections(path: &Path, scenes: &SceneSet) -> Result<Vec<Detection>> {
    parse_detections(path, &read_file(path)?, scenes)
}

/// Detection records from `(scene_id, boxes)` pairs, in iteration order.
pub fn detections_json<'a, I>(per_scene: I) -> Value
where
    I: IntoIterator<Item = (&'a str, &'a [georep_core::deteval::ScoredBox])>,
{
    let mut rows = Vec::new();
    for (scene_id, dets) in per_scene {
        for d in dets {
            rows.push(json!({"scene_id": scene_id, "bbox": bbox_json(&d.bbox), "score": num(d.score)}));
        }
    }
    json!({"format_version": FORMAT_VERSION, "detections": rows})
}

/// Same bytes as `canon::to_string(&detections_json(..))`, written directly;
/// the simulator emits tens of thousands of records per run.
pub fn detections_text<'a, I>(per_scene: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a [georep_core::deteval::ScoredBox])>,
{
    use std::fmt::Write;
    let mut rows = String::new();
    for (scene_id, dets) in per_scene {
        let id = serde_json::to_string(scene_id).expect("string");
        for d in dets {
            let b = &d.bbox;
            if !rows.is_empty() {
                rows.push_str(",\n");
            }
            write!(
                rows,
                "    {{\"bbox\":[{},{},{},{}],\"scene_id\":{id},\"score\":{}}}",
                canon::format_f64(b.x),
                canon::format_f64(b.y),
                canon::format_f64(b.w),
                canon::format_f64(b.h),
                canon::format_f64(d.score),
            )
            .expect("in-memory write");
        }
    }
    if rows.is_empty() {
        format!("{{\n  \"detections\": [],\n  \"format_version\": {FORMAT_VERSION}\n}}\n")
    } else {
        format!("{{\n  \"detections\": [\n{rows}\n  ],\n  \"format_version\": {FORMAT_VERSION}\n}}\n")
    }
}

pub fn detection_records_json(dets: &[Detection]) -> Value {
    let rows: Vec<Value> = dets
        .iter()
        .map(|d| json!({"scene_id": d.scene_id, "bbox": bbox_json(&d.bbox), "score": num(d.score)}))
        .collect();
    json!({"format_version": FORMAT_VERSION, "detections": rows})
}

pub fn regions_json(partition: &Partition) -> Value {
    let scheme = partition.scheme();
    let (dlat, dlon) = scheme.steps();
    let rows: Vec<Value> = partition
        .regions()
        .iter()
        .map(|r| {
            json!({
                "region_id": r.region_id,
                "lat_lo": num(r.lat_lo),
                "lat_hi": num(r.lat_hi),
                "lon_lo": num(r.lon_lo),
                "lon_hi": num(r.lon_hi),
            })
        })
        .collect();
    json!({
        "format_version": FORMAT_VERSION,
        "scheme": {"name": scheme.to_string(), "kind": scheme.kind(), "dlat": dlat, "dlon": dlon},
        "regions": rows,
    })
}

/// Loads any JSON file into a typed value, reporting the failing path.
pub fn load_typed<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(path, &read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("m.json")
    }

    #[test]
    fn manifest_examples() {
        let one = br#"{"format_version":1,"scenes":[{"scene_id":"a","lon_deg":15,"lat_deg":5}]}"#;
        let set = parse_manifest(p(), one).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.scenes()[0].width_px, 256);

        let dup = br#"{"format_version":1,"scenes":[
            {"scene_id":"s1","lon_deg":1,"lat_deg":1},{"scene_id":"s1","lon_deg":2,"lat_deg":2}]}"#;
        let err = parse_manifest(p(), dup).unwrap_err();
        assert!(err.to_string().contains("s1"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let lat = br#"{"format_version":1,"scenes":[{"scene_id":"n","lon_deg":1,"lat_deg":91}]}"#;
        let err = parse_manifest(p(), lat).unwrap_err().to_string();
        assert!(err.starts_with("ValidationError: n:"), "{err}");

        let broken = parse_manifest(p(), b"{\"format_version\":1,").unwrap_err();
        assert!(broken.to_string().starts_with("ParseError"));
        let unknown = br#"{"format_version":1,"scenes":[],"extra":0}"#;
        assert!(parse_manifest(p(), unknown).is_err());
        let version = br#"{"format_version":2,"scenes":[]}"#;
        assert!(parse_manifest(p(), version).unwrap_err().to_string().contains("format_version"));
    }

    #[test]
    fn negative_longitudes_are_normalized() {
        let m = br#"{"format_version":1,"scenes":[{"scene_id":"w","lon_deg":-90,"lat_deg":0}]}"#;
        assert_eq!(parse_manifest(p(), m).unwrap().scenes()[0].center.lon_deg(), 270.0);
    }

    fn scenes() -> SceneSet {
        let m = br#"{"format_version":1,"scenes":[{"scene_id":"s1","lon_deg":15,"lat_deg":5}]}"#;
        parse_manifest(p(), m).unwrap()
    }

    #[test]
    fn annotation_rules() {
        let s = scenes();
        let ok = br#"{"format_version":1,"boxes":[{"scene_id":"s1","bbox":[250,10,20,20],"diameter_km":2}]}"#;
        let boxes = parse_annotations(p(), ok, &s).unwrap();
        assert_eq!(boxes[0].bbox.w, 6.0);
        let big = br#"{"format_version":1,"boxes":[{"scene_id":"s1","bbox":[0,0,5,5],"diameter_km":30}]}"#;
        let err = parse_annotations(p(), big, &s).unwrap_err().to_string();
        assert!(err.contains("boxes[0]") && err.starts_with("ValidationError"), "{err}");
        let unknown = br#"{"format_version":1,"boxes":[{"scene_id":"zz","bbox":[0,0,5,5]}]}"#;
        let err = parse_annotations(p(), unknown, &s).unwrap_err().to_string();
        assert!(err.starts_with("UnknownScene"), "{err}");
    }

    #[test]
    fn detection_rules() {
        let s = scenes();
        let bad = br#"{"format_version":1,"detections":[{"scene_id":"s1","bbox":[0,0,5,5],"score":1.5}]}"#;
        assert!(parse_detections(p(), bad, &s).is_err());
        let good = br#"{"format_version":1,"detections":[{"scene_id":"s1","bbox":[0,0,5,5],"score":0.5}]}"#;
        let d = parse_detections(p(), good, &s).unwrap();
        let text = canon::to_string(&detection_records_json(&d));
        assert_eq!(parse_detections(p(), text.as_bytes(), &s).unwrap(), d);
    }

    #[test]
    fn direct_detection_text_matches_canonical() {
        use georep_core::deteval::ScoredBox;
        use georep_core::geomodel::BBox;
        let a = vec![
            ScoredBox { bbox: BBox::new(0.5, 1.0, 2.0, 3.25).unwrap(), score: 0.1 },
            ScoredBox { bbox: BBox::new(10.0, 0.0, 1.0, 1.0).unwrap(), score: 1.0 },
        ];
        let b: Vec<ScoredBox> = Vec::new();
        let c = vec![ScoredBox { bbox: BBox::new(3.0, 4.0, 5.0, 6.0).unwrap(), score: 0.0 }];
        let scenes = [("s\"1", &a[..]), ("s2", &b[..]), ("s3", &c[..])];
        assert_eq!(detections_text(scenes), canon::to_string(&detections_json(scenes)));
        let empty = [("s2", &b[..])];
        assert_eq!(detections_text(empty), canon::to_string(&detections_json(empty)));
    }

    fn manifest_text(rows: &[(String, f64, f64, u32, f64)]) -> String {
        let scenes: Vec<Value> = rows
            .iter()
            .map(|(id, lon, lat, px, gsd)| {
                json!({"scene_id": id, "lon_deg": num(*lon), "lat_deg": num(*lat),
                       "width_px": px, "height_px": px, "gsd_m": num(*gsd)})
            })
            .collect();
        canon::to_string(&json!({"format_version": 1, "scenes": scenes}))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn canonical_manifest_round_trips(
            rows in proptest::collection::vec(
                (0.0f64..360.0, -90.0f64..=90.0, 1u32..4096, 0.01f64..1000.0), 0..20)
        ) {
            let rows: Vec<(String, f64, f64, u32, f64)> = rows
                .into_iter()
                .enumerate()
                .map(|(i, (lon, lat, px, gsd))| (format!("scene-{i}"), lon, lat, px, gsd))
                .collect();
            let text = manifest_text(&rows);
            let set = parse_manifest(p(), text.as_bytes()).unwrap();
            prop_assert_eq!(canon::to_string(&manifest_json(&set)), text);
        }
    }
}
