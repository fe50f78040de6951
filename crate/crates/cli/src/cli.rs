//! Argument parsing and the five commands.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use georep_core::deteval::{evaluate_grouped, group_by_scene, DEFAULT_IOU_THRESHOLD};
use georep_core::hypotest::{levene_test, paired_t_test, pearson};
use georep_core::partition::{make_partition, region_census, scene_regions, PartitionScheme};
use georep_core::simulator::{ExperimentId, SimConfig};
use georep_core::spatialstats::{
    build_weights, MoranInput, MoranResult, WeightsKind, WeightsMatrix, WeightsTransform,
    DEFAULT_PERMUTATIONS,
};
use georep_core::RngStream;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::canon::format_f64;
use crate::error::{Error, Result};
use crate::formats::{load_annotations, load_detections, load_manifest, read_file, regions_json, write_json, write_text};
use crate::maps::{self, MapLayer};
use crate::meta::write_run_meta;
use crate::simulate::{run_simulation, SimOptions};
use crate::stats_out::{self, levene_entry, moran_entry, pearson_entry, ttest_entry, with};

#[derive(Debug, Parser)]
#[command(name = "georep", version, about = "Replicability maps, spatial statistics and seeded experiment replays")]
pub struct Cli {
    /// Worker threads (default: all cores). Output never depends on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assign scenes to regions; writes regions.json and census.csv.
    Partition(PartitionArgs),
    /// Per-region mAP50 map from ground truth and detections.
    Repmap(RepmapArgs),
    /// Run one statistical test and append it to stats.json.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Replay a simulated experiment into a report directory.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    pub manifest: PathBuf,
    #[arg(long, default_value = "grid10")]
    pub scheme: PartitionScheme,
    /// Annotations file; fills the n_gt column.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapFormat {
    Geojson,
    Csv,
    Both,
}

#[derive(Debug, Args)]
pub struct RepmapArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value = "grid10")]
    pub scheme: PartitionScheme,
    #[arg(long, value_enum, default_value = "both")]
    pub format: MapFormat,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    pub iou: f64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Moran's I with a permutation test.
    MoransI(MoranArgs),
    /// Levene's test, one group per column.
    Levene(LeveneArgs),
    /// Paired t-test of two columns.
    TtestPaired(TtestArgs),
    /// Pearson correlation of two columns; rows with a blank cell are skipped.
    Pearson(PearsonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transform {
    Binary,
    Row,
}

#[derive(Debug, Args)]
pub struct MoranArgs {
    /// CSV of values; blank cells are nulls. With --scheme and a region_id
    /// column, rows are aligned to the partition and absent regions are null.
    #[arg(long)]
    pub values: PathBuf,
    #[arg(long, default_value = "value")]
    pub column: String,
    #[arg(long, conflicts_with = "weights_file", required_unless_present = "weights_file")]
    pub scheme: Option<PartitionScheme>,
    /// Contiguity kind (default: the scheme's natural kind).
    #[arg(long, requires = "scheme")]
    pub weights: Option<WeightsKind>,
    /// JSON `{"n": .., "edges": [[i, j], ..]}`; values are taken in row order.
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "binary")]
    pub transform: Transform,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub n_perm: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LeveneArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated group columns; blank cells are skipped.
    #[arg(long, value_delimiter = ',', required = true)]
    pub columns: Vec<String>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PearsonArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// exp1..exp5 (or 1..5).
    pub experiment: ExperimentId,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON file overriding any subset of the default configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Keep the trained strip in the Moran vector (exp4/exp5).
    #[arg(long)]
    pub include_training_strip: Option<bool>,
    /// Write detections of every run, not only the first replicate per group.
    #[arg(long)]
    pub all_detections: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

/// Runs a parsed command line on a pool of the requested size.
pub fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n as usize);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Partition(a) => cmd_partition(&a),
        Command::Repmap(a) => cmd_repmap(&a),
        Command::Stats(s) => cmd_stats(&s),
        Command::Simulate(a) => cmd_simulate(&a),
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))
}

fn put(dir: &Path, name: &str, text: &str, files: &mut Vec<(String, String)>) -> Result<()> {
    files.push((name.to_string(), write_text(&dir.join(name), text)?));
    Ok(())
}

fn put_json(dir: &Path, name: &str, v: &Value, files: &mut Vec<(String, String)>) -> Result<()> {
    files.push((name.to_string(), write_json(&dir.join(name), v)?));
    Ok(())
}

fn cmd_partition(a: &PartitionArgs) -> Result<()> {
    let scenes = load_manifest(&a.manifest)?;
    let gts = match &a.gt {
        Some(p) => load_annotations(p, &scenes)?,
        None => Vec::new(),
    };
    let partition = make_partition(a.scheme)?;
    let census = region_census(&scenes, &gts, &partition);
    create_dir(&a.out)?;
    let mut files = Vec::new();
    put_json(&a.out, "regions.json", &regions_json(&partition), &mut files)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["region_id", "lat_lo", "lat_hi", "lon_lo", "lon_hi", "n_scenes", "n_gt"])
        .expect("in-memory write");
    for (r, c) in partition.regions().iter().zip(&census) {
        w.write_record([
            r.region_id.clone(),
            format_f64(r.lat_lo),
            format_f64(r.lat_hi),
            format_f64(r.lon_lo),
            format_f64(r.lon_hi),
            c.n_scenes.to_string(),
            c.n_gt.to_string(),
        ])
        .expect("in-memory write");
    }
    put(&a.out, "census.csv", &csv_string(w), &mut files)?;
    let mut inputs = vec![a.manifest.as_path()];
    inputs.extend(a.gt.as_deref());
    write_run_meta(&a.out, "partition", json!({"scheme": a.scheme.to_string()}), &inputs, &files)?;
    let populated = census.iter().filter(|c| !c.is_empty()).count();
    println!(
        "partition {}: {} regions, {} with scenes, {} scenes",
        a.scheme,
        partition.len(),
        populated,
        scenes.len()
    );
    Ok(())
}

fn cmd_repmap(a: &RepmapArgs) -> Result<()> {
    if !(a.iou > 0.0 && a.iou <= 1.0) {
        return Err(Error::Usage(format!("--iou must lie in (0, 1], got {}", a.iou)));
    }
    let scenes = load_manifest(&a.manifest)?;
    let gts = load_annotations(&a.gt, &scenes)?;
    let dets = load_detections(&a.pred, &scenes)?;
    let partition = make_partition(a.scheme)?;
    let boxes = group_by_scene(&scenes, &gts, &dets)?;
    let eval = evaluate_grouped(&partition, &scene_regions(&scenes, &partition), &boxes, a.iou);
    create_dir(&a.out)?;
    let mut files = Vec::new();
    let layers = [MapLayer {
        run_id: None,
        scores: &eval.scores,
    }];
    if a.format != MapFormat::Csv {
        put_json(&a.out, "map.geojson", &maps::geojson(&partition, &layers), &mut files)?;
    }
    if a.format != MapFormat::Geojson {
        put(&a.out, "map.csv", &maps::csv(&partition, &layers), &mut files)?;
    }
    put_json(&a.out, "matches.json", &maps::matches_json(&scenes, &eval.matches), &mut files)?;
    let format = match a.format {
        MapFormat::Geojson => "geojson",
        MapFormat::Csv => "csv",
        MapFormat::Both => "both",
    };
    write_run_meta(
        &a.out,
        "repmap",
        json!({"scheme": a.scheme.to_string(), "format": format, "iou": crate::canon::num(a.iou)}),
        &[&a.manifest, &a.gt, &a.pred],
        &files,
    )?;
    let scored: Vec<f64> = eval.scores.iter().filter_map(|s| s.map50).collect();
    let mean = if scored.is_empty() {
        f64::NAN
    } else {
        scored.iter().sum::<f64>() / scored.len() as f64
    };
    println!(
        "repmap {}: {} regions with ground truth, mean mAP50 {:.4}",
        a.scheme,
        scored.len(),
        mean
    );
    Ok(())
}

/// A CSV table: header plus rows of raw cells.
struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn load(path: &Path) -> Result<Table> {
        let bytes = read_file(path)?;
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
        let header = r
            .headers()
            .map_err(|e| Error::parse(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(|e| Error::parse(path, e))?.iter().map(str::to_string).collect());
        }
        Ok(Table {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(&self.path, format!("no column {name:?}")))
    }

    /// Column as optional numbers; blank cells are `None`.
    fn numbers(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let c = self.col(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row[c].as_str();
                if cell.is_empty() {
                    return Ok(None);
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(Error::parse(
                        &self.path,
                        format!("row {}, column {name:?}: not a finite number: {cell:?}", i + 1),
                    )),
                }
            })
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    n: usize,
    edges: Vec<(usize, usize)>,
}

fn stats_out_dir(out: &Path, entry: Value, command: &str, config: Value, inputs: &[&Path]) -> Result<()> {
    create_dir(out)?;
    let digest = stats_out::append(out, vec![entry])?;
    write_run_meta(
        out,
        command,
        config,
        inputs,
        &[(stats_out::STATS_FILE.to_string(), digest)],
    )
}

fn cmd_stats(s: &StatsCommand) -> Result<()> {
    match s {
        StatsCommand::MoransI(a) => cmd_moran(a),
        StatsCommand::Levene(a) => {
            let t = Table::load(&a.input)?;
            let groups: Vec<Vec<f64>> = a
                .columns
                .iter()
                .map(|c| Ok(t.numbers(c)?.into_iter().flatten().collect()))
                .collect::<Result<_>>()?;
            let r = levene_test(&groups)?;
            let entry = with(levene_entry(&r), json!({"groups": a.columns}));
            stats_out_dir(&a.out, entry, "stats levene", json!({"columns": a.columns}), &[&a.input])?;
            println!("levene: W = {:.6}, df = ({}, {}), p = {}", r.w, r.df1, r.df2, fmt_p(r.p));
            Ok(())
        }
        StatsCommand::TtestPaired(a) => {
            let t = Table::load(&a.input)?;
            let (xa, xb) = (complete(&t.numbers(&a.a)?, &a.a, &t)?, complete(&t.numbers(&a.b)?, &a.b, &t)?);
            let r = paired_t_test(&xa, &xb)?;
            let entry = with(ttest_entry(&r), json!({"a": a.a, "b": a.b}));
            stats_out_dir(&a.out, entry, "stats ttest-paired", json!({"a": a.a, "b": a.b}), &[&a.input])?;
            println!(
                "ttest-paired: t = {:.6}, df = {}, p = {}, mean_diff = {:.6}",
                r.t, r.df, fmt_p(r.p_two_sided), r.mean_diff
            );
            Ok(())
        }
        StatsCommand::Pearson(a) => {
            let t = Table::load(&a.input)?;
            let (x, y): (Vec<f64>, Vec<f64>) = t
                .numbers(&a.x)?
                .into_iter()
                .zip(t.numbers(&a.y)?)
                .filter_map(|(x, y)| Some((x?, y?)))
                .unzip();
            let r = pearson(&x, &y)?;
            let entry = with(pearson_entry(&r), json!({"x": a.x, "y": a.y}));
            stats_out_dir(&a.out, entry, "stats pearson", json!({"x": a.x, "y": a.y}), &[&a.input])?;
            println!("pearson: r = {:.6}, n = {}, t = {:.6}, p = {}", r.r, r.n, r.t, fmt_p(r.p_two_sided));
            Ok(())
        }
    }
}

/// Paired columns must not have blanks.
fn complete(xs: &[Option<f64>], name: &str, t: &Table) -> Result<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(i, x)| x.ok_or_else(|| Error::parse(&t.path, format!("row {}, column {name:?}: blank cell", i + 1))))
        .collect()
}

fn cmd_moran(a: &MoranArgs) -> Result<()> {
    let t = Table::load(&a.values)?;
    let raw = t.numbers(&a.column)?;
    let mut inputs = vec![a.values.as_path()];
    let (values, weights, kind) = match (&a.scheme, &a.weights_file) {
        (Some(scheme), _) => {
            let p = make_partition(*scheme)?;
            let kind = a.weights.unwrap_or_else(|| WeightsKind::default_for(*scheme));
            let w = build_weights(&p, kind)?;
            let values = match t.col("region_id") {
                Ok(c) => {
                    let mut v = vec![None; p.len()];
                    for (i, row) in t.rows.iter().enumerate() {
                        let pos = p.position(&row[c]).ok_or_else(|| {
                            Error::parse(&t.path, format!("row {}: unknown region_id {:?} for {scheme}", i + 1, row[c]))
                        })?;
                        v[pos] = raw[i];
                    }
                    v
                }
                Err(_) => raw,
            };
            (values, w, kind.as_str().to_string())
        }
        (None, Some(path)) => {
            let f: WeightsFile = crate::formats::load_typed(path)?;
            inputs.push(path);
            (raw, WeightsMatrix::from_edges(f.n, &f.edges)?, "custom".to_string())
        }
        (None, None) => return Err(Error::Usage("one of --scheme or --weights-file is required".into())),
    };
    let weights = weights.with_transform(match a.transform {
        Transform::Binary => WeightsTransform::Binary,
        Transform::Row => WeightsTransform::Row,
    });
    let input = MoranInput::new(&values, &weights)?;
    let rng = RngStream::new(a.seed, "stats/morans_i");
    let permuted: Vec<f64> = (0..a.n_perm)
        .into_par_iter()
        .map(|k| input.permuted_statistic(&rng, k))
        .collect();
    let r = MoranResult::from_permutations(&input, &permuted)?;
    let transform = match a.transform {
        Transform::Binary => "binary",
        Transform::Row => "row",
    };
    let entry = with(moran_entry(&r, &kind, a.seed), json!({"transform": transform, "column": a.column}));
    let config = json!({
        "column": a.column,
        "scheme": a.scheme.map(|s| s.to_string()),
        "weights": kind,
        "transform": transform,
        "n_perm": a.n_perm,
        "seed": a.seed,
    });
    stats_out_dir(&a.out, entry, "stats morans-i", config, &inputs)?;
    println!(
        "morans-i: I = {:.6}, E[I] = {:.6}, pseudo_p = {:.4}, z_sim = {:.4}, n = {}",
        r.i_obs, r.e_null, r.pseudo_p, r.z_sim, r.n_used
    );
    Ok(())
}

/// Reads a simulator config; errors carry a JSON pointer to the bad key.
pub fn load_sim_config(path: &Path) -> Result<SimConfig> {
    let bytes = read_file(path)?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    let config: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        georep_core::Error::Config {
            pointer,
            reason: e.into_inner().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => load_sim_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(inc) = a.include_training_strip {
        config.exp4.include_training_strip = inc;
        config.exp5.include_training_strip = inc;
    }
    let report = run_simulation(
        a.experiment,
        &config,
        a.seed,
        &a.out,
        SimOptions {
            all_detections: a.all_detections,
        },
    )?;
    let resolved = serde_json::to_value(&config).expect("config serializes");
    let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
    write_run_meta(
        &a.out,
        &format!("simulate {}", a.experiment),
        json!({"experiment": a.experiment.name(), "seed": a.seed, "all_detections": a.all_detections, "sim": resolved}),
        &inputs,
        &report.files,
    )?;
    println!(
        "simulate {} seed {}: {} runs, {} files in {}",
        a.experiment,
        a.seed,
        report.summaries.len(),
        report.files.len() + 1,
        a.out.display()
    );
    Ok(())
}

fn fmt_p(p: f64) -> String {
    if p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.6}")
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
