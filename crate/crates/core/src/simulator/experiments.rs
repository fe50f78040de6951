//! The five experiments: run plans, single-run execution and the statistics
//! computed over a finished set of runs.
//!
//! Execution is split so that callers can run the independent runs of a plan
//! in any order or in parallel: [`Experiment::execute`] is a pure function of
//! the experiment and one [`RunSpec`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::config::{SimConfig, StripExpConfig};
use super::detector::{simulate_run, DetectorParams};
use super::field::{LearningCurve, PerformanceField};
use super::world::SyntheticWorld;
use crate::deteval::{evaluate_grouped, pooled_ap, RegionScore, SceneBoxes};
use crate::geomodel::RngStream;
use crate::hypotest::{
    levene_test, mean, paired_t_test, pearson, sample_sd, spearman, LeveneResult, PearsonResult,
    TTestResult,
};
use crate::partition::{make_partition, scene_regions, Partition, PartitionScheme};
use crate::spatialstats::{build_weights, moran_permutation_test, MoranResult, WeightsKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentId {
    /// Accuracy against training-set size.
    Exp1,
    /// Run-to-run variance: fixed vs varying seeds, low vs high noise.
    Exp2,
    /// Grid replicability map and its correlation with data density.
    Exp3,
    /// Latitude strips: train on one strip, test on all.
    Exp4,
    /// Longitude strips: train on one strip, test on all.
    Exp5,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::Exp1,
        ExperimentId::Exp2,
        ExperimentId::Exp3,
        ExperimentId::Exp4,
        ExperimentId::Exp5,
    ];

    pub fn from_number(k: u32) -> Result<Self> {
        match k {
            1..=5 => Ok(Self::ALL[k as usize - 1]),
            _ => Err(Error::config("/experiment", format!("unknown experiment {k}, expected 1..5"))),
        }
    }

    pub fn number(self) -> u32 {
        self as u32 + 1
    }

    pub fn name(self) -> &'static str {
        ["exp1", "exp2", "exp3", "exp4", "exp5"][self as usize]
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix("exp").unwrap_or(s);
        match digits.parse::<u32>() {
            Ok(k) => Self::from_number(k),
            Err(_) => Err(Error::config("/experiment", format!("unknown experiment {s:?}"))),
        }
    }
}

/// One detector run of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// File-name-safe identifier, unique within the plan.
    pub run_id: String,
    pub group: String,
    pub replicate: usize,
    /// Label of the run's random stream.
    pub rng_label: String,
    pub train_size: u32,
    pub run_noise_sd: f64,
    /// Index into the experiment's training strips.
    pub train_strip: Option<usize>,
}

/// What the analysis needs from a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run_id: String,
    /// AP over all scenes pooled.
    pub accuracy: f64,
    /// Per-region scores for experiments with a partition.
    pub map: Option<Vec<RegionScore>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    /// Ground truth and detections per scene, in scene order.
    pub boxes: Vec<SceneBoxes>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    pub from: u32,
    pub to: u32,
    pub test: Result<TTestResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSizeAnalysis {
    pub sizes: Vec<u32>,
    /// `accuracy[size][replicate]`.
    pub accuracy: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Paired t-tests of consecutive sizes, paired by replicate.
    pub pairs: Vec<PairedComparison>,
}

impl SampleSizeAnalysis {
    /// Whether every consecutive mean is at least the previous one.
    pub fn is_monotone(&self) -> bool {
        self.mean.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub name: String,
    pub accuracy: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    /// Every run produced a bit-identical accuracy.
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatabilityAnalysis {
    /// `fixed`, `varying`, `low_noise`, `high_noise`.
    pub groups: Vec<GroupSummary>,
    pub fixed_vs_varying: Result<LeveneResult>,
    pub low_vs_high: Result<LeveneResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAnalysis {
    pub map: Vec<RegionScore>,
    /// Correlation of `map50` with `n_scenes` over cells with a score.
    pub density_correlation: Result<PearsonResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripResult {
    pub train_strip: [f64; 2],
    pub train_region: usize,
    pub map: Vec<RegionScore>,
    pub moran: Result<MoranResult>,
    /// The training strip scores at least as high as every other strip.
    pub own_is_max: bool,
    /// Spearman correlation of strip score with negative distance to the
    /// training strip.
    pub proximity: Result<PearsonResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripAnalysis {
    pub weights: WeightsKind,
    pub strips: Vec<StripResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    SampleSize(SampleSizeAnalysis),
    Repeatability(RepeatabilityAnalysis),
    Grid(GridAnalysis),
    Strips(StripAnalysis),
}

/// A seeded experiment: world, field, plan and everything per-run execution
/// shares.
#[derive(Debug, Clone)]
pub struct Experiment {
    id: ExperimentId,
    seed: u64,
    config: SimConfig,
    world: SyntheticWorld,
    field: PerformanceField,
    curve: LearningCurve,
    /// Field value at each scene center.
    quality: Vec<f64>,
    partition: Option<Partition>,
    scene_region: Vec<usize>,
    /// Region index of each training strip.
    train_regions: Vec<usize>,
    /// `quality` times the proximity multiplier, per training strip.
    strip_quality: Vec<Vec<f64>>,
    runs: Vec<RunSpec>,
}

fn strip_config(id: ExperimentId, config: &SimConfig) -> Option<&StripExpConfig> {
    match id {
        ExperimentId::Exp4 => Some(&config.exp4),
        ExperimentId::Exp5 => Some(&config.exp5),
        _ => None,
    }
}

/// Center-to-center distance in degrees; longitude wraps.
fn strip_distance(partition: &Partition, a: usize, b: usize) -> f64 {
    let (ra, rb) = (&partition.regions()[a], &partition.regions()[b]);
    let (lat_a, lon_a) = ra.center();
    let (lat_b, lon_b) = rb.center();
    match partition.scheme() {
        PartitionScheme::LonStrips { .. } => {
            let d = libm::fabs(lon_a - lon_b);
            d.min(360.0 - d)
        }
        _ => libm::fabs(lat_a - lat_b),
    }
}

impl Experiment {
    /// Validates `config`, then builds the world, field and plan for `seed`.
    pub fn new(id: ExperimentId, config: &SimConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let world = SyntheticWorld::generate(seed, &config.world)?;
        let mut field = PerformanceField::generate(&config.field, seed);
        let strips = strip_config(id, config);
        if let Some(s) = strips {
            field = field.with_patch_scale(s.patchiness_scale);
        }
        let curve = LearningCurve::from_config(&config.curve)?;
        let quality: Vec<f64> = world
            .scenes()
            .iter()
            .map(|s| field.value(s.center.lat_deg(), s.center.lon_deg()))
            .collect();

        let scheme = match id {
            ExperimentId::Exp3 => Some(PartitionScheme::Grid {
                dlat: config.exp3.cell_deg,
                dlon: config.exp3.cell_deg,
            }),
            ExperimentId::Exp4 => Some(PartitionScheme::LatStrips { d: config.exp4.strip_deg }),
            ExperimentId::Exp5 => Some(PartitionScheme::LonStrips { d: config.exp5.strip_deg }),
            _ => None,
        };
        let partition = scheme.map(make_partition).transpose()?;
        let scene_region = match &partition {
            Some(p) => scene_regions(world.scenes(), p),
            None => Vec::new(),
        };

        let mut train_regions = Vec::new();
        let mut strip_quality = Vec::new();
        if let (Some(s), Some(p)) = (strips, &partition) {
            for (k, &[lo, hi]) in s.train_strips.iter().enumerate() {
                let found = p.regions().iter().position(|r| match p.scheme() {
                    PartitionScheme::LonStrips { .. } => {
                        let lo = crate::geomodel::normalize_lon(lo);
                        r.lon_lo == lo && r.lon_hi == lo + (hi - s.train_strips[k][0])
                    }
                    _ => r.lat_lo == lo && r.lat_hi == hi,
                });
                let region = found.ok_or_else(|| {
                    Error::config(
                        format!("/{id}/train_strips/{k}"),
                        format!("[{lo}, {hi}] is not one of the {}-degree strips", s.strip_deg),
                    )
                })?;
                let multiplier: Vec<f64> = (0..p.len())
                    .map(|r| libm::exp(-strip_distance(p, r, region) / s.decay_deg))
                    .collect();
                strip_quality.push(
                    quality
                        .iter()
                        .zip(&scene_region)
                        .map(|(q, &r)| q * multiplier[r])
                        .collect(),
                );
                train_regions.push(region);
            }
        }

        let mut exp = Experiment {
            id,
            seed,
            config: config.clone(),
            world,
            field,
            curve,
            quality,
            partition,
            scene_region,
            train_regions,
            strip_quality,
            runs: Vec::new(),
        };
        exp.runs = exp.plan();
        Ok(exp)
    }

    fn plan(&self) -> Vec<RunSpec> {
        let c = &self.config;
        let run_noise = c.detector.run_noise_sd;
        let spec = |run_id: String, group: &str, replicate, rng_label, train_size, noise, strip| {
            RunSpec {
                run_id,
                group: String::from(group),
                replicate,
                rng_label,
                train_size,
                run_noise_sd: noise,
                train_strip: strip,
            }
        };
        let mut runs = Vec::new();
        match self.id {
            ExperimentId::Exp1 => {
                for &n in &c.exp1.sizes {
                    for r in 0..c.exp1.replicates {
                        runs.push(spec(
                            format!("n{n:04}_r{r:02}"),
                            "size",
                            r,
                            format!("exp1/n:{n:04}/run:{r}"),
                            n,
                            run_noise,
                            None,
                        ));
                    }
                }
            }
            ExperimentId::Exp2 => {
                let e = &c.exp2;
                let groups = [
                    ("fixed", run_noise, true),
                    ("varying", run_noise, false),
                    ("low_noise", e.low_noise_sd, false),
                    ("high_noise", e.high_noise_sd, false),
                ];
                for (group, noise, fixed) in groups {
                    for r in 0..e.runs {
                        let label = if fixed {
                            format!("exp2/{group}/run:fixed")
                        } else {
                            format!("exp2/{group}/run:{r}")
                        };
                        runs.push(spec(
                            format!("{group}_r{r:02}"),
                            group,
                            r,
                            label,
                            e.train_size,
                            noise,
                            None,
                        ));
                    }
                }
            }
            ExperimentId::Exp3 => runs.push(spec(
                String::from("grid"),
                "grid",
                0,
                String::from("exp3/run:0"),
                c.exp3.train_size,
                run_noise,
                None,
            )),
            ExperimentId::Exp4 | ExperimentId::Exp5 => {
                let s = strip_config(self.id, c).expect("strip experiment");
                let p = self.partition.as_ref().expect("strip partition");
                for (k, &region) in self.train_regions.iter().enumerate() {
                    let id = &p.regions()[region].region_id;
                    runs.push(spec(
                        format!("train_{}", id.replace(':', "")),
                        "train",
                        k,
                        format!("{}/train:{id}/run:0", self.id),
                        s.train_size,
                        run_noise,
                        Some(k),
                    ));
                }
            }
        }
        runs
    }

    pub fn id(&self) -> ExperimentId {
        self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn world(&self) -> &SyntheticWorld {
        &self.world
    }

    pub fn field(&self) -> &PerformanceField {
        &self.field
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn runs(&self) -> &[RunSpec] {
        &self.runs
    }

    /// Simulates and scores one run of the plan.
    pub fn execute(&self, run: &RunSpec) -> Result<RunOutput> {
        let quality = match run.train_strip {
            Some(k) => &self.strip_quality[k],
            None => &self.quality,
        };
        let d = &self.config.detector;
        let params = DetectorParams {
            quality: self.curve.quality(run.train_size as f64),
            scene_noise_sd: self.field.noise_sd(),
            run_noise_sd: run.run_noise_sd,
            jitter_px: d.jitter_px,
            fp_rate: d.fp_rate,
        };
        let dets = simulate_run(
            &self.world,
            quality,
            &params,
            &RngStream::new(self.seed, &run.rng_label),
        );
        let boxes: Vec<SceneBoxes> = dets
            .into_iter()
            .enumerate()
            .map(|(i, dets)| SceneBoxes {
                gts: self.world.boxes(i).to_vec(),
                dets,
            })
            .collect();
        let accuracy = pooled_ap(&boxes, d.iou_threshold)?;
        let map = self
            .partition
            .as_ref()
            .map(|p| evaluate_grouped(p, &self.scene_region, &boxes, d.iou_threshold).scores);
        Ok(RunOutput {
            summary: RunSummary {
                run_id: run.run_id.clone(),
                accuracy,
                map,
            },
            boxes,
        })
    }

    /// Every run in plan order, one after another.
    pub fn run_all(&self) -> Result<Vec<RunOutput>> {
        self.runs.iter().map(|r| self.execute(r)).collect()
    }

    /// Statistics over the summaries of every run, in plan order.
    pub fn analyze(&self, summaries: &[RunSummary]) -> Result<Analysis> {
        if summaries.len() != self.runs.len() {
            return Err(Error::LengthMismatch(summaries.len(), self.runs.len()));
        }
        for (s, r) in summaries.iter().zip(&self.runs) {
            if s.run_id != r.run_id {
                return Err(Error::validation(
                    s.run_id.as_str(),
                    format!("expected run {} at this position", r.run_id),
                ));
            }
        }
        let acc: Vec<f64> = summaries.iter().map(|s| s.accuracy).collect();
        Ok(match self.id {
            ExperimentId::Exp1 => Analysis::SampleSize(self.analyze_sizes(&acc)),
            ExperimentId::Exp2 => Analysis::Repeatability(self.analyze_repeatability(&acc)),
            ExperimentId::Exp3 => {
                let map = summaries[0].map.clone().expect("grid map");
                let (x, y): (Vec<f64>, Vec<f64>) = map
                    .iter()
                    .filter_map(|r| r.map50.map(|m| (m, r.n_scenes as f64)))
                    .unzip();
                Analysis::Grid(GridAnalysis {
                    density_correlation: pearson(&x, &y),
                    map,
                })
            }
            ExperimentId::Exp4 | ExperimentId::Exp5 => Analysis::Strips(self.analyze_strips(summaries)?),
        })
    }

    fn analyze_sizes(&self, acc: &[f64]) -> SampleSizeAnalysis {
        let reps = self.config.exp1.replicates;
        let sizes = self.config.exp1.sizes.clone();
        let accuracy: Vec<Vec<f64>> = acc.chunks(reps).map(<[f64]>::to_vec).collect();
        let pairs = (1..sizes.len())
            .map(|i| PairedComparison {
                from: sizes[i - 1],
                to: sizes[i],
                test: paired_t_test(&accuracy[i - 1], &accuracy[i]),
            })
            .collect();
        SampleSizeAnalysis {
            mean: accuracy.iter().map(|a| mean(a)).collect(),
            sd: accuracy.iter().map(|a| sample_sd(a)).collect(),
            sizes,
            accuracy,
            pairs,
        }
    }

    fn analyze_repeatability(&self, acc: &[f64]) -> RepeatabilityAnalysis {
        let groups: Vec<GroupSummary> = acc
            .chunks(self.config.exp2.runs)
            .zip(&self.runs.chunks(self.config.exp2.runs).collect::<Vec<_>>())
            .map(|(a, specs)| GroupSummary {
                name: specs[0].group.clone(),
                accuracy: a.to_vec(),
                mean: mean(a),
                sd: sample_sd(a),
                identical: a.iter().all(|x| x.to_bits() == a[0].to_bits()),
            })
            .collect();
        RepeatabilityAnalysis {
            fixed_vs_varying: levene_test(&[&groups[0].accuracy, &groups[1].accuracy]),
            low_vs_high: levene_test(&[&groups[2].accuracy, &groups[3].accuracy]),
            groups,
        }
    }

    fn analyze_strips(&self, summaries: &[RunSummary]) -> Result<StripAnalysis> {
        let s = strip_config(self.id, &self.config).expect("strip experiment");
        let p = self.partition.as_ref().expect("strip partition");
        let kind = WeightsKind::default_for(p.scheme());
        let weights = build_weights(p, kind)?;
        let mut strips = Vec::new();
        for (k, summary) in summaries.iter().enumerate() {
            let region = self.train_regions[k];
            let map = summary.map.clone().expect("strip map");
            let mut values: Vec<Option<f64>> = map.iter().map(|r| r.map50).collect();
            if !s.include_training_strip {
                values[region] = None;
            }
            let rng = RngStream::new(
                self.seed,
                &format!("{}/train:{}/moran", self.id, p.regions()[region].region_id),
            );
            let moran = moran_permutation_test(&values, &weights, self.config.stats.n_perm, &rng);
            let own = map[region].map50;
            let own_is_max = own.is_some_and(|o| map.iter().all(|r| r.map50.map_or(true, |m| m <= o)));
            let (score, closeness): (Vec<f64>, Vec<f64>) = map
                .iter()
                .enumerate()
                .filter_map(|(r, m)| m.map50.map(|v| (v, -strip_distance(p, r, region))))
                .unzip();
            strips.push(StripResult {
                train_strip: s.train_strips[k],
                train_region: region,
                map,
                moran,
                own_is_max,
                proximity: spearman(&score, &closeness),
            });
        }
        Ok(StripAnalysis {
            weights: kind,
            strips,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_scenes: usize) -> SimConfig {
        let mut c = SimConfig::default();
        c.world.n_scenes = n_scenes;
        c.stats.n_perm = 199;
        c
    }

    #[test]
    fn ids_parse_and_reject() {
        assert_eq!("exp3".parse::<ExperimentId>().unwrap(), ExperimentId::Exp3);
        assert_eq!("5".parse::<ExperimentId>().unwrap().number(), 5);
        for bad in ["exp0", "exp6", "six"] {
            assert_eq!(bad.parse::<ExperimentId>().unwrap_err().name(), "ConfigError");
        }
        assert!(ExperimentId::from_number(6).is_err());
    }

    #[test]
    fn plans_have_expected_shape() {
        let c = small(50);
        let count = |id| Experiment::new(id, &c, 1).unwrap().runs().len();
        assert_eq!(count(ExperimentId::Exp1), 90);
        assert_eq!(count(ExperimentId::Exp2), 80);
        assert_eq!(count(ExperimentId::Exp3), 1);
        assert_eq!(count(ExperimentId::Exp4), 3);
        assert_eq!(count(ExperimentId::Exp5), 2);
        let e4 = Experiment::new(ExperimentId::Exp4, &c, 1).unwrap();
        let ids: Vec<&str> = e4.runs().iter().map(|r| r.run_id.as_str()).collect();
        assert_eq!(ids, ["train_lat02", "train_lat08", "train_lat12"]);
        let e5 = Experiment::new(ExperimentId::Exp5, &c, 1).unwrap();
        assert_eq!(e5.runs()[1].run_id, "train_lon10");
    }

    #[test]
    fn misaligned_training_strip_is_a_config_error() {
        let mut c = small(10);
        c.exp4.train_strips[1] = [5.0, 15.0];
        let err = Experiment::new(ExperimentId::Exp4, &c, 0).unwrap_err();
        assert!(matches!(err, Error::Config { pointer, .. } if pointer == "/exp4/train_strips/1"));
    }

    #[test]
    fn fixed_group_is_degenerate_varying_is_not() {
        let mut c = small(300);
        c.exp2.runs = 5;
        let e = Experiment::new(ExperimentId::Exp2, &c, 7).unwrap();
        let outs = e.run_all().unwrap();
        assert_eq!(outs[0].boxes, outs[4].boxes);
        let sums: Vec<RunSummary> = outs.into_iter().map(|o| o.summary).collect();
        let Analysis::Repeatability(a) = e.analyze(&sums).unwrap() else { panic!() };
        assert!(a.groups[0].identical && a.groups[0].sd == 0.0);
        assert!(!a.groups[1].identical && a.groups[1].sd > 0.0);
        assert_eq!(a.groups[3].name, "high_noise");
    }

    #[test]
    fn training_strip_scores_highest() {
        let e = Experiment::new(ExperimentId::Exp4, &small(2000), 7).unwrap();
        let sums: Vec<RunSummary> = e.run_all().unwrap().into_iter().map(|o| o.summary).collect();
        let Analysis::Strips(a) = e.analyze(&sums).unwrap() else { panic!() };
        assert_eq!(a.weights, WeightsKind::LatPath);
        for s in &a.strips {
            assert!(s.own_is_max, "{:?}", s.train_strip);
            assert!(s.proximity.as_ref().unwrap().r > 0.0);
        }
    }

    #[test]
    fn analysis_checks_run_order() {
        let e = Experiment::new(ExperimentId::Exp3, &small(100), 2).unwrap();
        let mut s = e.execute(&e.runs()[0]).unwrap().summary;
        s.run_id = String::from("other");
        assert!(e.analyze(&[s]).is_err());
    }
}
