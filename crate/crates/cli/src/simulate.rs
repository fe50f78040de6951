//! Runs a simulator experiment and writes its report directory.
//!
//! Runs execute in parallel on the current rayon pool; results are collected
//! in plan order and every random draw is keyed by label, so the directory is
//! byte-identical for any thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use georep_core::deteval::{evaluate_grouped, RegionScore};
use georep_core::partition::{make_partition, scene_regions, Partition, PartitionScheme};
use georep_core::simulator::experiments::{
    Analysis, GridAnalysis, RepeatabilityAnalysis, SampleSizeAnalysis, StripAnalysis,
};
use georep_core::simulator::{Experiment, ExperimentId, RunSpec, RunSummary, SimConfig};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::formats::{annotations_json, detections_text, manifest_json, write_json, write_text};
use crate::maps::{self, MapLayer};
use crate::stats_out::{self, error_entry, levene_entry, moran_entry, pearson_entry, ttest_entry, with};

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Write every run's detections, not only the first replicate per group.
    pub all_detections: bool,
}

/// Per-run record kept after the run's boxes are dropped.
struct RunRecord {
    summary: RunSummary,
    /// Digest of the detections file, when one was written.
    digest: Option<String>,
    n_det: usize,
    reference_map: Option<Vec<RegionScore>>,
}

/// Everything a finished simulation produced, for callers and tests.
pub struct SimReport {
    pub analysis: Analysis,
    pub summaries: Vec<RunSummary>,
    /// `(file name, sha256)` of every file written, `run_meta.json` excluded.
    pub files: Vec<(String, String)>,
}

fn writes_detections(id: ExperimentId, run: &RunSpec, opts: SimOptions) -> bool {
    opts.all_detections
        || match id {
            ExperimentId::Exp1 | ExperimentId::Exp2 => run.replicate == 0,
            _ => true,
        }
}

/// Experiments without their own partition still get a grid map of one
/// reference run: the largest training size, or the first fixed-seed run.
fn is_reference(exp: &Experiment, run: &RunSpec) -> bool {
    match exp.id() {
        ExperimentId::Exp1 => {
            let last = *exp.config().exp1.sizes.last().expect("validated");
            run.train_size == last && run.replicate == 0
        }
        ExperimentId::Exp2 => run.group == "fixed" && run.replicate == 0,
        _ => false,
    }
}

pub fn run_simulation(
    id: ExperimentId,
    config: &SimConfig,
    seed: u64,
    out: &Path,
    opts: SimOptions,
) -> Result<SimReport> {
    let exp = Experiment::new(id, config, seed)?;
    fs::create_dir_all(out).map_err(|e| Error::write(out, e))?;
    let mut files = Vec::new();
    let put_json = |name: &str, v: &Value, files: &mut Vec<(String, String)>| -> Result<()> {
        let digest = write_json(&out.join(name), v)?;
        files.push((name.to_string(), digest));
        Ok(())
    };
    let world = exp.world();
    put_json("manifest.json", &manifest_json(world.scenes()), &mut files)?;
    put_json("annotations.json", &annotations_json(&world.annotations()), &mut files)?;

    let grid = make_partition(PartitionScheme::GRID10)?;
    let grid_regions = scene_regions(world.scenes(), &grid);
    let scene_ids: Vec<&str> = world.scenes().iter().map(|s| s.scene_id.as_str()).collect();

    let records: Vec<RunRecord> = exp
        .runs()
        .par_iter()
        .map(|run| -> Result<RunRecord> {
            let output = exp.execute(run)?;
            // Serializing a run's detections dominates the cost of a run, so
            // only runs whose file is kept are serialized and digested.
            let written = writes_detections(id, run, opts);
            let digest = if written {
                let text = detections_text(
                    scene_ids
                        .iter()
                        .zip(&output.boxes)
                        .map(|(id, b)| (*id, b.dets.as_slice())),
                );
                let name = format!("detections_{}.json", run.run_id);
                Some(write_text(&out.join(&name), &text)?)
            } else {
                None
            };
            let reference_map = is_reference(&exp, run).then(|| {
                evaluate_grouped(&grid, &grid_regions, &output.boxes, config.detector.iou_threshold).scores
            });
            Ok(RunRecord {
                n_det: output.boxes.iter().map(|b| b.dets.len()).sum(),
                summary: output.summary,
                digest,
                reference_map,
            })
        })
        .collect::<Result<_>>()?;

    for (run, rec) in exp.runs().iter().zip(&records) {
        if let Some(d) = &rec.digest {
            files.push((format!("detections_{}.json", run.run_id), d.clone()));
        }
    }
    let summaries: Vec<RunSummary> = records.iter().map(|r| r.summary.clone()).collect();
    let analysis = exp.analyze(&summaries)?;

    let put_text = |name: &str, text: &str, files: &mut Vec<(String, String)>| -> Result<()> {
        let digest = write_text(&out.join(name), text)?;
        files.push((name.to_string(), digest));
        Ok(())
    };
    put_text("runs.csv", &runs_csv(exp.runs(), &records), &mut files)?;

    // maps
    let (map_partition, layers): (&Partition, Vec<MapLayer>) = match exp.partition() {
        Some(p) if id == ExperimentId::Exp3 => (
            p,
            vec![MapLayer {
                run_id: None,
                scores: summaries[0].map.as_deref().expect("grid map"),
            }],
        ),
        Some(p) => (
            p,
            exp.runs()
                .iter()
                .zip(&summaries)
                .map(|(r, s)| MapLayer {
                    run_id: Some(r.run_id.as_str()),
                    scores: s.map.as_deref().expect("strip map"),
                })
                .collect(),
        ),
        None => {
            let rec = records.iter().find(|r| r.reference_map.is_some()).expect("reference run");
            (
                &grid,
                vec![MapLayer {
                    run_id: Some(rec.summary.run_id.as_str()),
                    scores: rec.reference_map.as_deref().expect("reference map"),
                }],
            )
        }
    };
    put_json("map.geojson", &maps::geojson(map_partition, &layers), &mut files)?;
    put_text("map.csv", &maps::csv(map_partition, &layers), &mut files)?;

    let entries = stats_entries(&exp, &analysis);
    put_json(stats_out::STATS_FILE, &stats_out::stats_json(entries), &mut files)?;
    put_text("summary.md", &summary_md(&exp, &analysis, &summaries, &records), &mut files)?;
    Ok(SimReport {
        analysis,
        summaries,
        files,
    })
}

fn runs_csv(runs: &[RunSpec], records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run_id",
        "group",
        "replicate",
        "train_size",
        "rng_label",
        "accuracy",
        "n_det",
        "detections_sha256",
    ])
    .expect("in-memory write");
    for (r, rec) in runs.iter().zip(records) {
        w.write_record([
            r.run_id.clone(),
            r.group.clone(),
            r.replicate.to_string(),
            r.train_size.to_string(),
            r.rng_label.clone(),
            crate::canon::format_f64(rec.summary.accuracy),
            rec.n_det.to_string(),
            rec.digest.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn stats_entries(exp: &Experiment, analysis: &Analysis) -> Vec<Value> {
    let seed = exp.seed();
    match analysis {
        Analysis::SampleSize(a) => a
            .pairs
            .iter()
            .map(|p| {
                let e = match &p.test {
                    Ok(t) => ttest_entry(t),
                    Err(e) => error_entry("paired_t", e),
                };
                with(e, json!({"from": p.from, "to": p.to}))
            })
            .collect(),
        Analysis::Repeatability(a) => {
            let mut out: Vec<Value> = a
                .groups
                .iter()
                .map(|g| {
                    let mut e = json!({
                        "test": "group_summary",
                        "group": g.name,
                        "n": g.accuracy.len(),
                        "mean": crate::canon::num(g.mean),
                        "sd": crate::canon::num(g.sd),
                        "identical": g.identical,
                    });
                    if g.identical {
                        e["note"] = json!("all replicates identical");
                    }
                    e
                })
                .collect();
            for (groups, res) in [
                (["fixed", "varying"], &a.fixed_vs_varying),
                (["low_noise", "high_noise"], &a.low_vs_high),
            ] {
                let e = match res {
                    Ok(l) => levene_entry(l),
                    Err(e) => error_entry("levene", e),
                };
                out.push(with(e, json!({"groups": groups})));
            }
            out
        }
        Analysis::Grid(a) => {
            let e = match &a.density_correlation {
                Ok(p) => pearson_entry(p),
                Err(e) => error_entry("pearson", e),
            };
            vec![with(e, json!({"x": "map50", "y": "n_scenes"}))]
        }
        Analysis::Strips(a) => {
            let kind = a.weights.as_str();
            let mut out = Vec::new();
            for (run, s) in exp.runs().iter().zip(&a.strips) {
                let e = match &s.moran {
                    Ok(m) => moran_entry(m, kind, seed),
                    Err(e) => error_entry("morans_i", e),
                };
                out.push(with(
                    e,
                    json!({
                        "run_id": run.run_id,
                        "train_strip": [crate::canon::num(s.train_strip[0]), crate::canon::num(s.train_strip[1])],
                    }),
                ));
            }
            out
        }
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.0001 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

fn summary_md(exp: &Experiment, analysis: &Analysis, summaries: &[RunSummary], records: &[RunRecord]) -> String {
    let mut s = String::new();
    let world = exp.world();
    let title = match exp.id() {
        ExperimentId::Exp1 => "accuracy vs training-set size",
        ExperimentId::Exp2 => "run-to-run variance under fixed and varying seeds",
        ExperimentId::Exp3 => "grid replicability map",
        ExperimentId::Exp4 => "latitude strips",
        ExperimentId::Exp5 => "longitude strips",
    };
    let _ = writeln!(s, "# {}: {title}\n", exp.id());
    let _ = writeln!(
        s,
        "seed {} | {} scenes | {} craters | {} runs | {} detections written\n",
        exp.seed(),
        world.scenes().len(),
        world.n_craters(),
        summaries.len(),
        records.iter().filter(|r| r.digest.is_some()).count(),
    );
    match analysis {
        Analysis::SampleSize(a) => sample_size_md(&mut s, a),
        Analysis::Repeatability(a) => repeatability_md(&mut s, a),
        Analysis::Grid(a) => grid_md(&mut s, a, summaries[0].accuracy),
        Analysis::Strips(a) => strips_md(&mut s, exp, a),
    }
    s
}

fn sample_size_md(s: &mut String, a: &SampleSizeAnalysis) {
    let _ = writeln!(s, "| size | mean mAP50 | sd | min | max |\n|---:|---:|---:|---:|---:|");
    for (i, n) in a.sizes.iter().enumerate() {
        let acc = &a.accuracy[i];
        let min = acc.iter().copied().fold(f64::INFINITY, f64::min);
        let max = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(s, "| {n} | {:.4} | {:.4} | {min:.4} | {max:.4} |", a.mean[i], a.sd[i]);
    }
    let _ = writeln!(s, "\nMean curve monotone non-decreasing: {}\n", if a.is_monotone() { "yes" } else { "no" });
    let _ = writeln!(s, "## Paired t-tests, consecutive sizes\n");
    let _ = writeln!(s, "| pair | mean diff | t | df | p | p < 0.05 |\n|---|---:|---:|---:|---:|:---:|");
    for p in &a.pairs {
        match &p.test {
            Ok(t) => {
                let _ = writeln!(
                    s,
                    "| {} vs {} | {:.5} | {:.3} | {} | {} | {} |",
                    p.from,
                    p.to,
                    t.mean_diff,
                    t.t,
                    t.df,
                    fmt_p(t.p_two_sided),
                    if t.p_two_sided < 0.05 { "yes" } else { "no" }
                );
            }
            Err(e) => {
                let _ = writeln!(s, "| {} vs {} | {e} | | | | |", p.from, p.to);
            }
        }
    }
}

fn repeatability_md(s: &mut String, a: &RepeatabilityAnalysis) {
    let _ = writeln!(s, "| group | runs | mean mAP50 | sd | note |\n|---|---:|---:|---:|---|");
    for g in &a.groups {
        let note = if g.identical { "all replicates identical" } else { "" };
        let _ = writeln!(s, "| {} | {} | {:.5} | {:.6} | {note} |", g.name, g.accuracy.len(), g.mean, g.sd);
    }
    let _ = writeln!(s, "\n## Levene's test\n\n| groups | W | df | p |\n|---|---:|---:|---:|");
    for (name, r) in [("fixed vs varying", &a.fixed_vs_varying), ("low_noise vs high_noise", &a.low_vs_high)] {
        match r {
            Ok(l) => {
                let _ = writeln!(s, "| {name} | {:.4} | {}, {} | {} |", l.w, l.df1, l.df2, fmt_p(l.p));
            }
            Err(e) => {
                let _ = writeln!(s, "| {name} | {e} | | |");
            }
        }
    }
}

fn grid_md(s: &mut String, a: &GridAnalysis, accuracy: f64) {
    let populated = a.map.iter().filter(|r| r.map50.is_some()).count();
    let _ = writeln!(s, "Pooled mAP50 {accuracy:.4}; {populated} of {} cells have ground truth.\n", a.map.len());
    match &a.density_correlation {
        Ok(p) => {
            let _ = writeln!(
                s,
                "Pearson correlation of cell mAP50 with cell scene count: r = {:.4}, t = {:.3}, df = {}, p = {}",
                p.r,
                p.t,
                p.df,
                fmt_p(p.p_two_sided)
            );
        }
        Err(e) => {
            let _ = writeln!(s, "Pearson correlation not computed: {e}");
        }
    }
}

fn strips_md(s: &mut String, exp: &Experiment, a: &StripAnalysis) {
    let _ = writeln!(s, "Weights: {}. `*` marks the training strip.\n", a.weights);
    let _ = writeln!(
        s,
        "| training strip | Moran's I | E[I] | pseudo-p | z (sim) | own strip highest | Spearman vs proximity |\n|---|---:|---:|---:|---:|:---:|---:|"
    );
    for st in &a.strips {
        let strip = format!("[{}, {}]", st.train_strip[0], st.train_strip[1]);
        let rho = st.proximity.as_ref().map(|p| format!("{:.3}", p.r)).unwrap_or_else(|e| e.name().into());
        match &st.moran {
            Ok(m) => {
                let _ = writeln!(
                    s,
                    "| {strip} | {:.4} | {:.4} | {} | {:.3} | {} | {rho} |",
                    m.i_obs,
                    m.e_null,
                    fmt_p(m.pseudo_p),
                    m.z_sim,
                    if st.own_is_max { "yes" } else { "no" }
                );
            }
            Err(e) => {
                let _ = writeln!(s, "| {strip} | {e} | | | | | {rho} |");
            }
        }
    }
    let p = exp.partition().expect("strip partition");
    let _ = write!(s, "\n| test strip |");
    for st in &a.strips {
        let _ = write!(s, " [{}, {}] |", st.train_strip[0], st.train_strip[1]);
    }
    let _ = write!(s, "\n|---|");
    for _ in &a.strips {
        let _ = write!(s, "---:|");
    }
    let _ = writeln!(s);
    for (i, r) in p.regions().iter().enumerate() {
        let bounds = match p.scheme() {
            PartitionScheme::LonStrips { .. } => format!("[{}, {}]", r.lon_lo, r.lon_hi),
            _ => format!("[{}, {}]", r.lat_lo, r.lat_hi),
        };
        let _ = write!(s, "| {bounds} |");
        for st in &a.strips {
            let star = if st.train_region == i { "*" } else { "" };
            match st.map[i].map50 {
                Some(m) => {
                    let _ = write!(s, " {m:.4}{star} |");
                }
                None => {
                    let _ = write!(s, " - |");
                }
            }
        }
        let _ = writeln!(s);
    }
}
