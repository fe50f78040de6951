//! The simulated detector: turns ground truth into scored detections.

use alloc::format;
use alloc::vec::Vec;

use super::config::DetectorConfig;
use super::field::{LearningCurve, PerformanceField};
use super::world::{log_uniform_diameter, place_box, SyntheticWorld};
use crate::deteval::ScoredBox;
use crate::geomodel::{BBox, Detection, RngStream};

/// Run-level detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Learning-curve quality `q(n)` of the trained model.
    pub quality: f64,
    /// Per-scene noise on the detection probability.
    pub scene_noise_sd: f64,
    /// Per-run offset on the detection probability.
    pub run_noise_sd: f64,
    pub jitter_px: f64,
    pub fp_rate: f64,
}

impl DetectorParams {
    pub fn new(
        curve: &LearningCurve,
        train_size: u32,
        field: &PerformanceField,
        config: &DetectorConfig,
    ) -> Self {
        DetectorParams {
            quality: curve.quality(train_size as f64),
            scene_noise_sd: field.noise_sd(),
            run_noise_sd: config.run_noise_sd,
            jitter_px: config.jitter_px,
            fp_rate: config.fp_rate,
        }
    }
}

/// One detector run over `world`. `scene_quality[i]` is the field value at
/// scene `i` times any proximity multiplier. The run offset comes from
/// `run/offset`, everything about scene `i` from `run/scene:<id>`, so the
/// result does not depend on evaluation order.
pub fn simulate_run(
    world: &SyntheticWorld,
    scene_quality: &[f64],
    params: &DetectorParams,
    run: &RngStream,
) -> Vec<Vec<ScoredBox>> {
    let scenes = world.scenes();
    assert_eq!(scene_quality.len(), scenes.len(), "one quality per scene");
    let offset = run.substream("offset").normal(0.0, params.run_noise_sd);
    let mut out = Vec::with_capacity(scenes.len());
    for (i, scene) in scenes.iter().enumerate() {
        let mut rng = run.substream(&format!("scene:{}", scene.scene_id));
        let (w, h) = (scene.width_px as f64, scene.height_px as f64);
        let eps = rng.normal(0.0, params.scene_noise_sd);
        let p = (params.quality * scene_quality[i] + eps + offset).clamp(0.0, 1.0);
        let mut dets = Vec::new();
        for g in world.boxes(i) {
            if rng.uniform() >= p {
                continue;
            }
            let j = params.jitter_px;
            let x = g.x + rng.normal(0.0, j);
            let y = g.y + rng.normal(0.0, j);
            // jitter may not collapse a box; tiny boxes keep their own size
            let bw = (g.w + rng.normal(0.0, j)).max(g.w.min(1.0));
            let bh = (g.h + rng.normal(0.0, j)).max(g.h.min(1.0));
            let score = (p - 0.2 * rng.uniform()).clamp(0.0, 1.0);
            if let Some(bbox) = (BBox { x, y, w: bw, h: bh }).clip(w, h) {
                dets.push(ScoredBox { bbox, score });
            }
        }
        let n_fp = rng.poisson(params.fp_rate * (1.0 - p));
        for _ in 0..n_fp {
            let side = log_uniform_diameter(&mut rng) * 1000.0 / scene.gsd_m;
            let placed = place_box(&mut rng, side, w, h);
            let score = rng.uniform() * p;
            if let Some(bbox) = placed {
                dets.push(ScoredBox { bbox, score });
            }
        }
        out.push(dets);
    }
    out
}

/// Flattens per-scene detections into records, scene order then box order.
pub fn to_detections(world: &SyntheticWorld, per_scene: &[Vec<ScoredBox>]) -> Vec<Detection> {
    world
        .scenes()
        .iter()
        .zip(per_scene)
        .flat_map(|(s, dets)| {
            dets.iter().map(move |d| Detection {
                scene_id: s.scene_id.clone(),
                bbox: d.bbox,
                score: d.score,
            })
        })
        .collect()
}

/// Detections of a model trained on `train_size` samples. With `fixed_seed`
/// every replicate shares the run stream `detect/run:fixed`; otherwise
/// replicate `r` uses `detect/run:r`.
pub fn gen_detections(
    world: &SyntheticWorld,
    field: &PerformanceField,
    curve: &LearningCurve,
    config: &DetectorConfig,
    train_size: u32,
    seed: u64,
    fixed_seed: bool,
    replicate: usize,
) -> Vec<Detection> {
    let label = if fixed_seed {
        format!("detect/run:fixed")
    } else {
        format!("detect/run:{replicate}")
    };
    let quality: Vec<f64> = world
        .scenes()
        .iter()
        .map(|s| field.value(s.center.lat_deg(), s.center.lon_deg()))
        .collect();
    let params = DetectorParams::new(curve, train_size, field, config);
    let per_scene = simulate_run(world, &quality, &params, &RngStream::new(seed, &label));
    to_detections(world, &per_scene)
}
