//! Whole-pipeline checks through the public API only.

use georep_core::deteval::{replicability_map, ScoredBox};
use georep_core::partition::{make_partition, region_census, PartitionScheme};
use georep_core::simulator::{to_detections, Analysis, Experiment, ExperimentId, SimConfig};
use georep_core::spatialstats::{build_weights, moran_permutation_test, WeightsKind};
use georep_core::RngStream;

fn small(n_scenes: usize) -> SimConfig {
    let mut c = SimConfig::default();
    c.world.n_scenes = n_scenes;
    c
}

#[test]
fn experiments_replay_identically() {
    let config = small(400);
    for id in ExperimentId::ALL {
        let a = Experiment::new(id, &config, 9).unwrap();
        let b = Experiment::new(id, &config, 9).unwrap();
        let first = &a.runs()[0];
        assert_eq!(a.runs(), b.runs());
        assert_eq!(a.execute(first).unwrap(), b.execute(first).unwrap(), "{id}");
        let other = Experiment::new(id, &config, 10).unwrap();
        assert_ne!(a.execute(first).unwrap().summary, other.execute(first).unwrap().summary, "{id}");
    }
}

#[test]
fn simulated_grid_map_matches_record_level_evaluation() {
    let exp = Experiment::new(ExperimentId::Exp3, &small(1500), 4).unwrap();
    let out = exp.execute(&exp.runs()[0]).unwrap();
    let world = exp.world();
    let per_scene: Vec<Vec<ScoredBox>> = out.boxes.iter().map(|b| b.dets.clone()).collect();
    let dets = to_detections(world, &per_scene);
    let grid = make_partition(PartitionScheme::GRID10).unwrap();
    let map = replicability_map(world.scenes(), &world.annotations(), &dets, &grid).unwrap();
    assert_eq!(Some(&map), out.summary.map.as_ref());

    let census = region_census(world.scenes(), &world.annotations(), &grid);
    for (r, c) in map.iter().zip(&census) {
        assert_eq!((r.n_scenes, r.n_gt), (c.n_scenes, c.n_gt));
        assert_eq!(r.map50.is_some(), c.n_gt > 0);
    }
}

#[test]
fn grid_map_feeds_moran_and_correlation() {
    let exp = Experiment::new(ExperimentId::Exp3, &small(3000), 1).unwrap();
    let summary = exp.execute(&exp.runs()[0]).unwrap().summary;
    let Analysis::Grid(a) = exp.analyze(&[summary]).unwrap() else {
        panic!("exp3 analyzes a grid");
    };
    let grid = exp.partition().unwrap();
    let w = build_weights(grid, WeightsKind::default_for(grid.scheme())).unwrap();
    let values: Vec<Option<f64>> = a.map.iter().map(|r| r.map50).collect();
    let rng = RngStream::new(1, "moran");
    let m = moran_permutation_test(&values, &w, 199, &rng).unwrap();
    assert_eq!(m.n_used, values.iter().flatten().count());
    assert_eq!(m, moran_permutation_test(&values, &w, 199, &rng).unwrap());
    // the latitude-degraded field gives a clustered map
    assert!(m.i_obs > 0.0);
    let r = a.density_correlation.unwrap();
    assert_eq!(r.n, m.n_used);
}

#[test]
fn strip_experiments_analyze_every_training_strip() {
    for (id, strips) in [(ExperimentId::Exp4, 3), (ExperimentId::Exp5, 2)] {
        let exp = Experiment::new(id, &small(1500), 3).unwrap();
        let summaries: Vec<_> = exp.runs().iter().map(|r| exp.execute(r).unwrap().summary).collect();
        let Analysis::Strips(a) = exp.analyze(&summaries).unwrap() else {
            panic!("{id} analyzes strips");
        };
        assert_eq!(a.strips.len(), strips);
        for s in &a.strips {
            assert_eq!(s.map.len(), 18);
            assert!(s.moran.is_ok(), "{id}: {:?}", s.moran);
        }
    }
}
