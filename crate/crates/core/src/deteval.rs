//! Detection matching, all-points average precision and per-region mAP50.
//!
//! There is a single object class, so mAP50 is the AP at IoU 0.5. Each
//! region pools the labels of all its scenes into one precision-recall
//! curve. Score ties are broken by input order everywhere.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::geomodel::{BBox, Detection, GroundTruthBox, SceneSet};
use crate::partition::{scene_regions, Partition};
use crate::{Error, Result};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Intersection over union.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = a.x1().min(b.x1()) - a.x.max(b.x);
    let ih = a.y1().min(b.y1()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a.area() + b.area() - inter)
}

/// A box with a confidence score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredBox {
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchLabel {
    /// Index into the detection slice that was matched.
    pub det_index: usize,
    pub score: f64,
    pub is_tp: bool,
    pub matched_gt: Option<usize>,
}

/// Greedy matching for one scene. Detections are visited by descending
/// score (stable); each takes the still-unmatched ground truth with the
/// highest IoU `>= iou_thresh`, lowest index on ties, or becomes a false
/// positive. Labels are returned in detection input order.
pub fn match_detections(gts: &[BBox], dets: &[ScoredBox], iou_thresh: f64) -> Vec<MatchLabel> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    let mut taken = vec![false; gts.len()];
    let mut labels: Vec<MatchLabel> = dets
        .iter()
        .enumerate()
        .map(|(i, d)| MatchLabel {
            det_index: i,
            score: d.score,
            is_tp: false,
            matched_gt: None,
        })
        .collect();
    for i in order {
        let mut best: Option<(usize, f64)> = None;
        for (j, gt) in gts.iter().enumerate() {
            if taken[j] {
                continue;
            }
            let v = iou(&dets[i].bbox, gt);
            if v >= iou_thresh && best.map_or(true, |(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            taken[j] = true;
            labels[i].is_tp = true;
            labels[i].matched_gt = Some(j);
        }
    }
    labels
}

/// All-points interpolated AP: labels are ranked by descending score
/// (stable), precision is replaced by its running maximum from the right,
/// and the resulting step function is integrated over recall.
pub fn average_precision(labels: &[MatchLabel], n_gt: usize) -> Result<f64> {
    if n_gt == 0 {
        return Err(Error::Domain(String::from("average precision needs n_gt >= 1")));
    }
    let mut ranked: Vec<(f64, bool)> = labels.iter().map(|l| (l.score, l.is_tp)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ap_of_ranked(&ranked, n_gt))
}

fn ap_of_ranked(ranked: &[(f64, bool)], n_gt: usize) -> f64 {
    let mut precision = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    for (k, &(_, is_tp)) in ranked.iter().enumerate() {
        tp += is_tp as usize;
        precision.push(tp as f64 / (k + 1) as f64);
    }
    let mut envelope = 0.0f64;
    for p in precision.iter_mut().rev() {
        envelope = envelope.max(*p);
        *p = envelope;
    }
    // fold from +0.0: an empty float `sum()` is -0.0
    let sum = ranked
        .iter()
        .zip(&precision)
        .filter(|((_, is_tp), _)| *is_tp)
        .fold(0.0, |acc, (_, p)| acc + p);
    (sum / n_gt as f64).min(1.0)
}

/// Accuracy of one region. `map50` is `None` exactly when `n_gt == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionScore {
    pub region_id: String,
    pub map50: Option<f64>,
    pub n_scenes: usize,
    pub n_gt: usize,
    pub n_det: usize,
}

/// Ground truth and detections of one scene, detections in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneBoxes {
    pub gts: Vec<BBox>,
    pub dets: Vec<ScoredBox>,
}

/// Match labels of every scene plus the per-region scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub matches: Vec<Vec<MatchLabel>>,
    pub scores: Vec<RegionScore>,
}

/// Groups validated boxes by scene. Detection order within each scene is the
/// input order, which is also the global order used for score ties.
pub fn group_by_scene(
    scenes: &SceneSet,
    gts: &[GroundTruthBox],
    dets: &[Detection],
) -> Result<Vec<SceneBoxes>> {
    let mut out = vec![SceneBoxes::default(); scenes.len()];
    for g in gts {
        let i = scenes
            .index_of(&g.scene_id)
            .ok_or_else(|| Error::UnknownScene(g.scene_id.clone()))?;
        out[i].gts.push(g.bbox);
    }
    for d in dets {
        let i = scenes
            .index_of(&d.scene_id)
            .ok_or_else(|| Error::UnknownScene(d.scene_id.clone()))?;
        out[i].dets.push(ScoredBox {
            bbox: d.bbox,
            score: d.score,
        });
    }
    Ok(out)
}

/// Per-region mAP50 from scene-grouped boxes. `scene_region[i]` is the region
/// index of scene `i`. Labels are pooled in scene order, then detection order.
pub fn evaluate_grouped(
    partition: &Partition,
    scene_region: &[usize],
    boxes: &[SceneBoxes],
    iou_thresh: f64,
) -> Evaluation {
    assert_eq!(scene_region.len(), boxes.len(), "one region index per scene");
    let n = partition.len();
    let mut pooled: Vec<Vec<(f64, bool)>> = vec![Vec::new(); n];
    let mut counts = vec![(0usize, 0usize, 0usize); n];
    let mut matches = Vec::with_capacity(boxes.len());
    for (sb, &r) in boxes.iter().zip(scene_region) {
        let labels = match_detections(&sb.gts, &sb.dets, iou_thresh);
        pooled[r].extend(labels.iter().map(|l| (l.score, l.is_tp)));
        let c = &mut counts[r];
        c.0 += 1;
        c.1 += sb.gts.len();
        c.2 += sb.dets.len();
        matches.push(labels);
    }
    let scores = partition
        .regions()
        .iter()
        .zip(pooled.iter_mut().zip(&counts))
        .map(|(region, (ranked, &(n_scenes, n_gt, n_det)))| {
            let map50 = (n_gt > 0).then(|| {
                ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
                ap_of_ranked(ranked, n_gt)
            });
            RegionScore {
                region_id: region.region_id.clone(),
                map50,
                n_scenes,
                n_gt,
                n_det,
            }
        })
        .collect();
    Evaluation { matches, scores }
}

/// Full evaluation of validated inputs: matches per scene and the
/// replicability map over `partition`.
pub fn evaluate(
    scenes: &SceneSet,
    gts: &[GroundTruthBox],
    dets: &[Detection],
    partition: &Partition,
) -> Result<Evaluation> {
    let boxes = group_by_scene(scenes, gts, dets)?;
    let regions = scene_regions(scenes, partition);
    Ok(evaluate_grouped(partition, &regions, &boxes, DEFAULT_IOU_THRESHOLD))
}

/// Per-region mAP50 in partition order.
pub fn replicability_map(
    scenes: &SceneSet,
    gts: &[GroundTruthBox],
    dets: &[Detection],
    partition: &Partition,
) -> Result<Vec<RegionScore>> {
    evaluate(scenes, gts, dets, partition).map(|e| e.scores)
}

/// AP over all scenes pooled together.
pub fn pooled_ap(boxes: &[SceneBoxes], iou_thresh: f64) -> Result<f64> {
    let mut ranked = Vec::new();
    let mut n_gt = 0;
    for sb in boxes {
        n_gt += sb.gts.len();
        ranked.extend(
            match_detections(&sb.gts, &sb.dets, iou_thresh)
                .iter()
                .map(|l| (l.score, l.is_tp)),
        );
    }
    if n_gt == 0 {
        return Err(Error::Domain(format!("no ground truth in {} scenes", boxes.len())));
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ap_of_ranked(&ranked, n_gt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomodel::{GeoPoint, SceneRecord};
    use crate::partition::{make_partition, PartitionScheme};
    use proptest::prelude::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    fn sb(bbox: BBox, score: f64) -> ScoredBox {
        ScoredBox { bbox, score }
    }

    fn label(score: f64, is_tp: bool) -> MatchLabel {
        MatchLabel {
            det_index: 0,
            score,
            is_tp,
            matched_gt: None,
        }
    }

    // Pixel counting on a 1-px lattice; exact for integer boxes.
    fn raster_iou(a: &BBox, c: &BBox) -> f64 {
        let inside = |bx: &BBox, px: f64, py: f64| px >= bx.x && px < bx.x1() && py >= bx.y && py < bx.y1();
        let (mut inter, mut uni) = (0u32, 0u32);
        for px in 0..40 {
            for py in 0..40 {
                let (px, py) = (px as f64 + 0.5, py as f64 + 0.5);
                let (ia, ic) = (inside(a, px, py), inside(c, px, py));
                inter += (ia && ic) as u32;
                uni += (ia || ic) as u32;
            }
        }
        inter as f64 / uni as f64
    }

    #[test]
    fn no_detections_score_positive_zero() {
        let ap = average_precision(&[], 3).unwrap();
        assert!(ap == 0.0 && ap.is_sign_positive());
    }

    #[test]
    fn iou_examples() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(20.0, 20.0, 5.0, 5.0)), 0.0);
        assert_eq!(iou(&a, &b(10.0, 0.0, 5.0, 5.0)), 0.0);
        let c = b(5.0, 0.0, 10.0, 10.0);
        assert_eq!(raster_iou(&a, &c), 50.0 / 150.0);
        assert!((iou(&a, &c) - raster_iou(&a, &c)).abs() < 1e-15);
        assert_eq!(iou(&a, &c), iou(&c, &a));
    }

    #[test]
    fn iou_matches_raster_oracle_on_integer_boxes() {
        let mut r = crate::RngStream::new(9, "iou");
        for _ in 0..300 {
            let mut rb = || {
                let x = r.below(20) as f64;
                let y = r.below(20) as f64;
                b(x, y, 1.0 + r.below(19) as f64, 1.0 + r.below(19) as f64)
            };
            let (p, q) = (rb(), rb());
            assert!((iou(&p, &q) - raster_iou(&p, &q)).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_prefers_higher_score() {
        let gt = [b(0.0, 0.0, 10.0, 10.0)];
        let dets = [sb(b(0.0, 0.0, 10.0, 10.0), 0.9), sb(b(1.0, 0.0, 10.0, 10.0), 0.8)];
        let l = match_detections(&gt, &dets, 0.5);
        assert_eq!((l[0].is_tp, l[1].is_tp), (true, false));
        assert_eq!(l[0].matched_gt, Some(0));
        assert!(match_detections(&gt, &[], 0.5).is_empty());
    }

    #[test]
    fn score_ties_follow_input_order() {
        let gt = [b(0.0, 0.0, 10.0, 10.0)];
        let dets = [sb(b(1.0, 0.0, 10.0, 10.0), 0.5), sb(b(0.0, 0.0, 10.0, 10.0), 0.5)];
        let l = match_detections(&gt, &dets, 0.5);
        assert!(l[0].is_tp && !l[1].is_tp);
    }

    #[test]
    fn iou_ties_go_to_lowest_gt_index() {
        let gts = [b(0.0, 0.0, 10.0, 10.0), b(0.0, 0.0, 10.0, 10.0)];
        let l = match_detections(&gts, &[sb(b(0.0, 0.0, 10.0, 10.0), 0.7)], 0.5);
        assert_eq!(l[0].matched_gt, Some(0));
    }

    // Greedy matching is the lexicographically best assignment when
    // detections are taken in score order and each ranks candidate ground
    // truths by (IoU desc, index asc) with "unmatched" last.
    fn enumerate_best(gts: &[BBox], dets: &[ScoredBox], thr: f64) -> Vec<Option<usize>> {
        let mut order: Vec<usize> = (0..dets.len()).collect();
        order.sort_by(|&a, &c| dets[c].score.total_cmp(&dets[a].score));
        let rank = |d: usize, g: Option<usize>| -> (u8, f64, i64) {
            match g {
                None => (0, 0.0, 0),
                Some(j) => (1, iou(&dets[d].bbox, &gts[j]), -(j as i64)),
            }
        };
        let mut best: Option<(Vec<(u8, f64, i64)>, Vec<Option<usize>>)> = None;
        fn rec(
            k: usize,
            order: &[usize],
            used: &mut Vec<bool>,
            cur: &mut Vec<Option<usize>>,
            gts: &[BBox],
            dets: &[ScoredBox],
            thr: f64,
            visit: &mut dyn FnMut(&[Option<usize>]),
        ) {
            if k == order.len() {
                visit(cur);
                return;
            }
            let d = order[k];
            cur[d] = None;
            rec(k + 1, order, used, cur, gts, dets, thr, visit);
            for j in 0..gts.len() {
                if !used[j] && iou(&dets[d].bbox, &gts[j]) >= thr {
                    used[j] = true;
                    cur[d] = Some(j);
                    rec(k + 1, order, used, cur, gts, dets, thr, visit);
                    used[j] = false;
                }
            }
            cur[d] = None;
        }
        let mut used = vec![false; gts.len()];
        let mut cur = vec![None; dets.len()];
        let mut visit = |a: &[Option<usize>]| {
            let key: Vec<_> = order.iter().map(|&d| rank(d, a[d])).collect();
            let better = match &best {
                None => true,
                Some((bk, _)) => key.partial_cmp(bk) == Some(core::cmp::Ordering::Greater),
            };
            if better {
                best = Some((key, a.to_vec()));
            }
        };
        rec(0, &order, &mut used, &mut cur, gts, dets, thr, &mut visit);
        best.unwrap().1
    }

    #[test]
    fn two_gt_three_det_fixture() {
        let gts = [b(0.0, 0.0, 10.0, 10.0), b(50.0, 50.0, 10.0, 10.0)];
        let dets = [
            sb(b(1.0, 1.0, 10.0, 10.0), 0.9),
            sb(b(20.0, 20.0, 10.0, 10.0), 0.8),
            sb(b(51.0, 50.0, 10.0, 10.0), 0.7),
        ];
        let l = match_detections(&gts, &dets, 0.5);
        let tp: Vec<bool> = l.iter().map(|l| l.is_tp).collect();
        assert_eq!(tp, [true, false, true]);
        let oracle = enumerate_best(&gts, &dets, 0.5);
        assert_eq!(l.iter().map(|l| l.matched_gt).collect::<Vec<_>>(), oracle);
        let ap = average_precision(&l, 2).unwrap();
        assert!((ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn greedy_matches_enumeration_oracle() {
        let mut r = crate::RngStream::new(21, "enum");
        for _ in 0..400 {
            let ng = r.below(5) as usize;
            let nd = r.below(6) as usize;
            let rb = |r: &mut crate::RngStream| {
                b(r.below(12) as f64, r.below(12) as f64, 4.0 + r.below(6) as f64, 4.0 + r.below(6) as f64)
            };
            let gts: Vec<_> = (0..ng).map(|_| rb(&mut r)).collect();
            let dets: Vec<_> = (0..nd).map(|_| sb(rb(&mut r), r.below(4) as f64 / 4.0)).collect();
            let got: Vec<_> = match_detections(&gts, &dets, 0.5).iter().map(|l| l.matched_gt).collect();
            assert_eq!(got, enumerate_best(&gts, &dets, 0.5));
        }
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[label(0.9, true)], 1).unwrap(), 1.0);
        assert_eq!(average_precision(&[], 2).unwrap(), 0.0);
        assert!(average_precision(&[], 0).is_err());
        let l = [label(0.9, true), label(0.8, false), label(0.7, true)];
        assert!((average_precision(&l, 2).unwrap() - 0.833_333_333_333_333_4).abs() < 1e-15);
        // label order does not matter once scores differ
        let shuffled = [l[2], l[0], l[1]];
        assert_eq!(average_precision(&shuffled, 2), average_precision(&l, 2));
    }

    fn arb_labels() -> impl Strategy<Value = (Vec<MatchLabel>, usize)> {
        prop::collection::vec((0u8..10, any::<bool>()), 0..30).prop_flat_map(|v| {
            let tps = v.iter().filter(|x| x.1).count();
            let labels: Vec<MatchLabel> =
                v.iter().map(|&(s, t)| label(s as f64 / 10.0, t)).collect();
            (Just(labels), tps.max(1)..tps + 5)
        })
    }

    proptest! {
        #[test]
        fn ap_bounded_and_metamorphic((labels, n_gt) in arb_labels(), pick in any::<prop::sample::Index>()) {
            let ap = average_precision(&labels, n_gt).unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));
            if labels.is_empty() {
                return Ok(());
            }
            let i = pick.index(labels.len());
            let mut edited = labels.clone();
            if labels[i].is_tp {
                edited[i].is_tp = false;
                prop_assert!(average_precision(&edited, n_gt).unwrap() <= ap);
            } else {
                edited.remove(i);
                prop_assert!(average_precision(&edited, n_gt).unwrap() >= ap);
            }
        }
    }

    fn scene(id: &str, lat: f64, lon: f64) -> SceneRecord {
        SceneRecord::with_defaults(id, GeoPoint::new(lon, lat).unwrap()).unwrap()
    }

    #[test]
    fn perfect_detection_region() {
        let scenes = SceneSet::new(vec![scene("a", 5.0, 15.0)]).unwrap();
        let gts = vec![GroundTruthBox::validated(&scenes, "a", [10.0, 10.0, 20.0, 20.0], None, "#0").unwrap()];
        let dets = vec![Detection::validated(&scenes, "a", [10.0, 10.0, 20.0, 20.0], 0.9, "#0").unwrap()];
        let p = make_partition(PartitionScheme::GRID10).unwrap();
        let scores = replicability_map(&scenes, &gts, &dets, &p).unwrap();
        let cell = p.position("grid:r08c01").unwrap();
        assert_eq!(scores[cell].map50, Some(1.0));
        assert_eq!((scores[cell].n_scenes, scores[cell].n_gt, scores[cell].n_det), (1, 1, 1));
        assert_eq!(scores.iter().filter(|s| s.map50.is_none()).count(), 647);
    }

    #[test]
    fn false_positives_everywhere_score_zero() {
        let scenes = SceneSet::new(vec![scene("a", 5.0, 15.0), scene("b", -45.0, 200.0)]).unwrap();
        let gts = vec![
            GroundTruthBox::validated(&scenes, "a", [0.0, 0.0, 10.0, 10.0], None, "#0").unwrap(),
            GroundTruthBox::validated(&scenes, "b", [0.0, 0.0, 10.0, 10.0], None, "#1").unwrap(),
        ];
        let dets = vec![
            Detection::validated(&scenes, "a", [100.0, 100.0, 10.0, 10.0], 0.9, "#0").unwrap(),
            Detection::validated(&scenes, "b", [100.0, 100.0, 10.0, 10.0], 0.9, "#1").unwrap(),
        ];
        let p = make_partition(PartitionScheme::GRID10).unwrap();
        let scores = replicability_map(&scenes, &gts, &dets, &p).unwrap();
        let populated: Vec<_> = scores.iter().filter(|s| s.n_gt > 0).collect();
        assert_eq!(populated.len(), 2);
        assert!(populated.iter().all(|s| s.map50 == Some(0.0)));
        // ground truth without detections is 0.0, not null
        let scores = replicability_map(&scenes, &gts, &[], &p).unwrap();
        assert_eq!(scores.iter().filter(|s| s.map50 == Some(0.0)).count(), 2);
    }

    #[test]
    fn single_region_equals_pooled_ap() {
        let mut r = crate::RngStream::new(4, "pool");
        let scenes: Vec<_> = (0..4)
            .map(|i| scene(&format!("s{i}"), -60.0 + 30.0 * i as f64, 90.0 * i as f64))
            .collect();
        let set = SceneSet::new(scenes).unwrap();
        let mut gts = Vec::new();
        let mut dets = Vec::new();
        for i in 0..4 {
            let id = format!("s{i}");
            for _ in 0..5 {
                let x = r.below(200) as f64;
                gts.push(GroundTruthBox::validated(&set, &id, [x, x, 20.0, 20.0], None, "g").unwrap());
                let j = r.below(6) as f64;
                let s = r.below(5) as f64 / 4.0;
                dets.push(Detection::validated(&set, &id, [x + j, x, 20.0, 20.0], s, "d").unwrap());
            }
        }
        let whole = make_partition(PartitionScheme::Grid { dlat: 180, dlon: 360 }).unwrap();
        let map = replicability_map(&set, &gts, &dets, &whole).unwrap();
        let boxes = group_by_scene(&set, &gts, &dets).unwrap();
        assert_eq!(map[0].map50.unwrap(), pooled_ap(&boxes, 0.5).unwrap());
    }

    #[test]
    fn unknown_scene_in_grouping() {
        let set = SceneSet::new(vec![scene("a", 0.0, 0.0)]).unwrap();
        let d = Detection {
            scene_id: "zzz".into(),
            bbox: b(0.0, 0.0, 1.0, 1.0),
            score: 0.5,
        };
        assert_eq!(group_by_scene(&set, &[], &[d]).unwrap_err().name(), "UnknownScene");
    }
}
