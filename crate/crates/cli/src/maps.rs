//! Replicability-map emitters: GeoJSON, CSV and the per-scene match dump.

use georep_core::deteval::{MatchLabel, RegionScore};
use georep_core::geomodel::SceneSet;
use georep_core::partition::{Partition, Region};
use georep_core::FORMAT_VERSION;
use serde_json::{json, Map, Value};

use crate::canon::{format_f64, num};

/// One map to emit; `run_id` tags rows when several maps share a file.
pub struct MapLayer<'a> {
    pub run_id: Option<&'a str>,
    pub scores: &'a [RegionScore],
}

fn ring(r: &Region) -> Value {
    let corners = [
        (r.lon_lo, r.lat_lo),
        (r.lon_hi, r.lat_lo),
        (r.lon_hi, r.lat_hi),
        (r.lon_lo, r.lat_hi),
        (r.lon_lo, r.lat_lo),
    ];
    Value::Array(corners.iter().map(|&(x, y)| json!([num(x), num(y)])).collect())
}

/// FeatureCollection with one polygon per region and layer. Longitudes stay
/// in `[0, 360]`; `map50` is omitted for regions without ground truth.
pub fn geojson(partition: &Partition, layers: &[MapLayer]) -> Value {
    let mut features = Vec::new();
    for layer in layers {
        for (region, s) in partition.regions().iter().zip(layer.scores) {
            let mut props = Map::new();
            props.insert("region_id".into(), json!(s.region_id));
            if let Some(m) = s.map50 {
                props.insert("map50".into(), num(m));
            }
            props.insert("n_scenes".into(), json!(s.n_scenes));
            props.insert("n_gt".into(), json!(s.n_gt));
            props.insert("n_det".into(), json!(s.n_det));
            if let Some(run) = layer.run_id {
                props.insert("run_id".into(), json!(run));
            }
            features.push(json!({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring(region)]},
                "properties": props,
            }));
        }
    }
    json!({
        "type": "FeatureCollection",
        "format_version": FORMAT_VERSION,
        "features": features,
    })
}

/// CSV twin of [`geojson`]: `region_id, lat_lo, lat_hi, lon_lo, lon_hi,
/// map50, n_scenes, n_gt, n_det`, with a leading `run_id` column when any
/// layer is tagged.
pub fn csv(partition: &Partition, layers: &[MapLayer]) -> String {
    let tagged = layers.iter().any(|l| l.run_id.is_some());
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let mut header = vec!["region_id", "lat_lo", "lat_hi", "lon_lo", "lon_hi", "map50", "n_scenes", "n_gt", "n_det"];
    if tagged {
        header.insert(0, "run_id");
    }
    w.write_record(&header).expect("in-memory write");
    for layer in layers {
        for (r, s) in partition.regions().iter().zip(layer.scores) {
            let mut row = vec![
                s.region_id.clone(),
                format_f64(r.lat_lo),
                format_f64(r.lat_hi),
                format_f64(r.lon_lo),
                format_f64(r.lon_hi),
                s.map50.map(format_f64).unwrap_or_default(),
                s.n_scenes.to_string(),
                s.n_gt.to_string(),
                s.n_det.to_string(),
            ];
            if tagged {
                row.insert(0, layer.run_id.unwrap_or_default().to_string());
            }
            w.write_record(&row).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Per-scene match labels for audit, detections in input order.
pub fn matches_json(scenes: &SceneSet, matches: &[Vec<MatchLabel>]) -> Value {
    let rows: Vec<Value> = scenes
        .iter()
        .zip(matches)
        .filter(|(_, m)| !m.is_empty())
        .map(|(s, m)| {
            let labels: Vec<Value> = m
                .iter()
                .map(|l| json!([l.det_index, num(l.score), l.is_tp, l.matched_gt]))
                .collect();
            json!({"scene_id": s.scene_id, "matches": labels})
        })
        .collect();
    json!({
        "format_version": FORMAT_VERSION,
        "columns": ["det_index", "score", "is_tp", "matched_gt"],
        "scenes": rows,
    })
}
