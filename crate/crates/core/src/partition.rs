//! Grid and strip partitions of the sphere.
//!
//! Every scheme is a `rows x cols` lattice: latitude strips have one column,
//! longitude strips one row. Regions are ordered north to south, then west to
//! east from 0 degrees. Assignment uses half-open `[lo, hi)` intervals on both
//! axes, except that latitude +90 belongs to the northernmost row.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geomodel::{spherical_cell_area, GeoPoint, GroundTruthBox, SceneRecord, SceneSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionScheme {
    Grid { dlat: u32, dlon: u32 },
    LatStrips { d: u32 },
    LonStrips { d: u32 },
}

impl PartitionScheme {
    pub const GRID10: PartitionScheme = PartitionScheme::Grid { dlat: 10, dlon: 10 };
    pub const LAT10: PartitionScheme = PartitionScheme::LatStrips { d: 10 };
    pub const LON20: PartitionScheme = PartitionScheme::LonStrips { d: 20 };

    pub fn kind(&self) -> &'static str {
        match self {
            PartitionScheme::Grid { .. } => "grid",
            PartitionScheme::LatStrips { .. } => "lat_strips",
            PartitionScheme::LonStrips { .. } => "lon_strips",
        }
    }

    fn prefix(&self) -> &'static str {
        match self {
            PartitionScheme::Grid { .. } => "grid",
            PartitionScheme::LatStrips { .. } => "lat",
            PartitionScheme::LonStrips { .. } => "lon",
        }
    }

    /// Latitude and longitude step in degrees.
    pub fn steps(&self) -> (u32, u32) {
        match *self {
            PartitionScheme::Grid { dlat, dlon } => (dlat, dlon),
            PartitionScheme::LatStrips { d } => (d, 360),
            PartitionScheme::LonStrips { d } => (180, d),
        }
    }

    fn validate(&self) -> Result<(usize, usize)> {
        let (dlat, dlon) = self.steps();
        if dlat == 0 || 180 % dlat != 0 {
            return Err(Error::Domain(format!("latitude step {dlat} does not divide 180")));
        }
        if dlon == 0 || 360 % dlon != 0 {
            return Err(Error::Domain(format!("longitude step {dlon} does not divide 360")));
        }
        Ok(((180 / dlat) as usize, (360 / dlon) as usize))
    }
}

impl fmt::Display for PartitionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PartitionScheme::GRID10 => f.write_str("grid10"),
            PartitionScheme::LAT10 => f.write_str("lat10"),
            PartitionScheme::LON20 => f.write_str("lon20"),
            PartitionScheme::Grid { dlat, dlon } => write!(f, "grid:{dlat}x{dlon}"),
            PartitionScheme::LatStrips { d } => write!(f, "lat:{d}"),
            PartitionScheme::LonStrips { d } => write!(f, "lon:{d}"),
        }
    }
}

/// Parses `grid10`, `lat10`, `lon20`, or the general forms `grid:DLATxDLON`,
/// `lat:D`, `lon:D`. Divisibility is checked by [`make_partition`].
impl FromStr for PartitionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unknown partition scheme {s:?}"));
        let num = |t: &str| t.parse::<u32>().map_err(|_| bad());
        match s {
            "grid10" => return Ok(Self::GRID10),
            "lat10" => return Ok(Self::LAT10),
            "lon20" => return Ok(Self::LON20),
            _ => {}
        }
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "grid" => {
                let (a, b) = rest.split_once('x').ok_or_else(bad)?;
                Ok(PartitionScheme::Grid { dlat: num(a)?, dlon: num(b)? })
            }
            "lat" => Ok(PartitionScheme::LatStrips { d: num(rest)? }),
            "lon" => Ok(PartitionScheme::LonStrips { d: num(rest)? }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub region_id: String,
    pub lat_lo: f64,
    pub lat_hi: f64,
    pub lon_lo: f64,
    pub lon_hi: f64,
    /// Row from the north pole.
    pub row: usize,
    /// Column from 0 degrees longitude, eastward.
    pub col: usize,
}

impl Region {
    pub fn center(&self) -> (f64, f64) {
        ((self.lat_lo + self.lat_hi) / 2.0, (self.lon_lo + self.lon_hi) / 2.0)
    }

    pub fn area(&self, radius: f64) -> f64 {
        spherical_cell_area(self.lat_lo, self.lat_hi, self.lon_lo, self.lon_hi, radius)
            .expect("regions always have valid bounds")
    }
}

/// The ordered regions of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    scheme: PartitionScheme,
    rows: usize,
    cols: usize,
    regions: Vec<Region>,
}

/// Builds the regions of `scheme`, north to south then west to east.
pub fn make_partition(scheme: PartitionScheme) -> Result<Partition> {
    let (rows, cols) = scheme.validate()?;
    let (dlat, dlon) = scheme.steps();
    let (dlat, dlon) = (dlat as f64, dlon as f64);
    let width = |n: usize| {
        let mut digits = 1;
        let mut m = n.saturating_sub(1);
        while m >= 10 {
            m /= 10;
            digits += 1;
        }
        digits.max(2)
    };
    let (rw, cw) = (width(rows), width(cols));
    let prefix = scheme.prefix();
    let mut regions = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        let lat_hi = 90.0 - row as f64 * dlat;
        for col in 0..cols {
            let lon_lo = col as f64 * dlon;
            let region_id = match scheme {
                PartitionScheme::Grid { .. } => format!("{prefix}:r{row:0rw$}c{col:0cw$}"),
                PartitionScheme::LatStrips { .. } => format!("{prefix}:{row:0rw$}"),
                PartitionScheme::LonStrips { .. } => format!("{prefix}:{col:0cw$}"),
            };
            regions.push(Region {
                region_id,
                lat_lo: lat_hi - dlat,
                lat_hi,
                lon_lo,
                lon_hi: lon_lo + dlon,
                row,
                col,
            });
        }
    }
    Ok(Partition {
        scheme,
        rows,
        cols,
        regions,
    })
}

impl Partition {
    pub fn scheme(&self) -> PartitionScheme {
        self.scheme
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn position(&self, region_id: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.region_id == region_id)
    }

    /// Index of the region containing `p`.
    pub fn locate(&self, p: &GeoPoint) -> usize {
        let (dlat, dlon) = self.scheme.steps();
        let from_south = libm::floor((p.lat_deg() + 90.0) / dlat as f64) as usize;
        // lat = +90 would be one past the top row
        let row = self.rows - 1 - from_south.min(self.rows - 1);
        let col = (libm::floor(p.lon_deg() / dlon as f64) as usize).min(self.cols - 1);
        self.index(row, col)
    }
}

/// Region id of the cell containing the scene center.
pub fn assign<'p>(scene: &SceneRecord, partition: &'p Partition) -> &'p str {
    &partition.regions[partition.locate(&scene.center)].region_id
}

/// Scene and ground-truth counts for one region.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegionCensus {
    pub n_scenes: usize,
    pub n_gt: usize,
}

impl RegionCensus {
    pub fn is_empty(&self) -> bool {
        self.n_scenes == 0
    }
}

/// Region index of every scene, in scene order.
pub fn scene_regions(scenes: &SceneSet, partition: &Partition) -> Vec<usize> {
    scenes.iter().map(|s| partition.locate(&s.center)).collect()
}

/// Per-region counts in partition order. Boxes that reference scenes not in
/// `scenes` are ignored; loaders reject them earlier.
pub fn region_census(
    scenes: &SceneSet,
    annotations: &[GroundTruthBox],
    partition: &Partition,
) -> Vec<RegionCensus> {
    let of_scene = scene_regions(scenes, partition);
    let mut out = vec![RegionCensus::default(); partition.len()];
    for &r in &of_scene {
        out[r].n_scenes += 1;
    }
    for gt in annotations {
        if let Some(i) = scenes.index_of(&gt.scene_id) {
            out[of_scene[i]].n_gt += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomodel::{sphere_area, MARS_RADIUS_KM};
    use alloc::string::ToString;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lon, lat).unwrap()
    }

    #[test]
    fn region_counts() {
        assert_eq!(make_partition(PartitionScheme::GRID10).unwrap().len(), 648);
        let g = make_partition(PartitionScheme::GRID10).unwrap();
        assert_eq!((g.rows(), g.cols()), (18, 36));
        assert_eq!(make_partition(PartitionScheme::LAT10).unwrap().len(), 18);
        assert_eq!(make_partition(PartitionScheme::LON20).unwrap().len(), 18);
    }

    #[test]
    fn non_dividing_step_rejected() {
        let err = make_partition(PartitionScheme::Grid { dlat: 7, dlon: 10 }).unwrap_err();
        assert_eq!(err.name(), "DomainError");
        assert!(make_partition(PartitionScheme::LonStrips { d: 25 }).is_err());
        assert!(make_partition(PartitionScheme::LatStrips { d: 0 }).is_err());
    }

    #[test]
    fn ordering_and_ids() {
        let g = make_partition(PartitionScheme::GRID10).unwrap();
        let first = &g.regions()[0];
        assert_eq!(first.region_id, "grid:r00c00");
        assert_eq!((first.lat_lo, first.lat_hi, first.lon_lo, first.lon_hi), (80.0, 90.0, 0.0, 10.0));
        assert_eq!(g.regions()[1].region_id, "grid:r00c01");
        assert_eq!(g.regions()[647].region_id, "grid:r17c35");

        let lon = make_partition(PartitionScheme::LON20).unwrap();
        let ids: Vec<_> = lon.regions().iter().map(|r| r.region_id.clone()).collect();
        assert_eq!(ids[0], "lon:00");
        assert_eq!(ids[17], "lon:17");
        assert_eq!(lon.regions()[5].lon_lo, 100.0);

        let lat = make_partition(PartitionScheme::LAT10).unwrap();
        assert_eq!(lat.regions()[0].lat_hi, 90.0);
        assert_eq!(lat.regions()[9].lat_hi, 0.0);
    }

    #[test]
    fn assignment_examples() {
        let g = make_partition(PartitionScheme::GRID10).unwrap();
        let r = &g.regions()[g.locate(&pt(5.0, 15.0))];
        assert_eq!((r.lat_lo, r.lat_hi, r.lon_lo, r.lon_hi), (0.0, 10.0, 10.0, 20.0));

        let r = &g.regions()[g.locate(&pt(90.0, 0.0))];
        assert_eq!((r.lat_lo, r.lat_hi), (80.0, 90.0));
        let r = &g.regions()[g.locate(&pt(-90.0, 0.0))];
        assert_eq!((r.lat_lo, r.lat_hi), (-90.0, -80.0));

        let lon = make_partition(PartitionScheme::LON20).unwrap();
        let r = &lon.regions()[lon.locate(&pt(-35.0, 350.0))];
        assert_eq!((r.lon_lo, r.lon_hi), (340.0, 360.0));
        // -10 normalizes to 350
        assert_eq!(lon.locate(&pt(0.0, -10.0)), lon.locate(&pt(0.0, 350.0)));

        let s = SceneRecord::with_defaults("s", pt(5.0, 15.0)).unwrap();
        assert_eq!(assign(&s, &g), "grid:r08c01");
    }

    #[test]
    fn lattice_sweep_total_and_disjoint() {
        for scheme in [
            PartitionScheme::GRID10,
            PartitionScheme::LAT10,
            PartitionScheme::LON20,
            PartitionScheme::Grid { dlat: 30, dlon: 45 },
        ] {
            let p = make_partition(scheme).unwrap();
            for i in 0..=360 {
                let lat = -90.0 + i as f64 * 0.5;
                for j in 0..720 {
                    let lon = j as f64 * 0.5;
                    let g = pt(lat, lon);
                    let hits: Vec<_> = p
                        .regions()
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| {
                            let in_lat = (r.lat_lo <= lat && lat < r.lat_hi)
                                || (lat == 90.0 && r.lat_hi == 90.0);
                            in_lat && r.lon_lo <= lon && lon < r.lon_hi
                        })
                        .map(|(k, _)| k)
                        .collect();
                    assert_eq!(hits.len(), 1, "{scheme} ({lat}, {lon})");
                    assert_eq!(hits[0], p.locate(&g), "{scheme} ({lat}, {lon})");
                }
            }
        }
    }

    #[test]
    fn areas_sum_to_sphere() {
        for scheme in [PartitionScheme::GRID10, PartitionScheme::LAT10, PartitionScheme::LON20] {
            let p = make_partition(scheme).unwrap();
            let total: f64 = p.regions().iter().map(|r| r.area(MARS_RADIUS_KM)).sum();
            let want = sphere_area(MARS_RADIUS_KM);
            assert!((total - want).abs() / want < 1e-12, "{scheme}");
        }
    }

    #[test]
    fn census_counts() {
        let g = make_partition(PartitionScheme::GRID10).unwrap();
        let scenes: Vec<_> = (0..3)
            .map(|i| SceneRecord::with_defaults(format!("s{i}"), pt(5.0 + i as f64, 15.0)).unwrap())
            .collect();
        let set = SceneSet::new(scenes).unwrap();
        let gts = vec![
            GroundTruthBox::validated(&set, "s0", [0.0, 0.0, 4.0, 4.0], None, "#0").unwrap(),
            GroundTruthBox::validated(&set, "s2", [0.0, 0.0, 4.0, 4.0], None, "#1").unwrap(),
        ];
        let c = region_census(&set, &gts, &g);
        let cell = g.locate(&pt(5.0, 15.0));
        assert_eq!(c[cell], RegionCensus { n_scenes: 3, n_gt: 2 });
        assert_eq!(c.iter().filter(|c| c.is_empty()).count(), 647);

        let empty = region_census(&SceneSet::default(), &[], &g);
        assert!(empty.iter().all(RegionCensus::is_empty));
    }

    #[test]
    fn scheme_strings() {
        for s in ["grid10", "lat10", "lon20", "grid:5x15", "lat:30", "lon:45"] {
            let scheme: PartitionScheme = s.parse().unwrap();
            assert_eq!(scheme.to_string(), s);
        }
        assert!("hex10".parse::<PartitionScheme>().is_err());
        assert!("grid:10".parse::<PartitionScheme>().is_err());
    }
}
