//! Contiguity weights and global Moran's I with permutation inference.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geomodel::RngStream;
use crate::hypotest::{mean, sample_sd};
use crate::partition::{Partition, PartitionScheme};
use crate::{Error, Result};

pub const DEFAULT_PERMUTATIONS: usize = 999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightsKind {
    /// Edge-sharing grid neighbours, wrapping across the 0/360 meridian.
    GridRookWrap,
    /// Edge- or corner-sharing grid neighbours, wrapping in longitude.
    GridQueenWrap,
    /// Consecutive latitude strips; no wrap across the poles.
    LatPath,
    /// Consecutive longitude strips, last adjacent to first.
    LonCycle,
}

impl WeightsKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightsKind::GridRookWrap => "grid_rook_wrap",
            WeightsKind::GridQueenWrap => "grid_queen_wrap",
            WeightsKind::LatPath => "lat_path",
            WeightsKind::LonCycle => "lon_cycle",
        }
    }

    /// The natural weights for a scheme (rook for grids).
    pub fn default_for(scheme: PartitionScheme) -> WeightsKind {
        match scheme {
            PartitionScheme::Grid { .. } => WeightsKind::GridRookWrap,
            PartitionScheme::LatStrips { .. } => WeightsKind::LatPath,
            PartitionScheme::LonStrips { .. } => WeightsKind::LonCycle,
        }
    }
}

impl fmt::Display for WeightsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid_rook_wrap" => Ok(WeightsKind::GridRookWrap),
            "grid_queen_wrap" => Ok(WeightsKind::GridQueenWrap),
            "lat_path" => Ok(WeightsKind::LatPath),
            "lon_cycle" => Ok(WeightsKind::LonCycle),
            _ => Err(Error::Domain(format!("unknown weights kind {s:?}"))),
        }
    }
}

/// Binary weights, or rows rescaled to sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightsTransform {
    #[default]
    Binary,
    Row,
}

/// Sparse symmetric adjacency over `n` regions.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsMatrix {
    neighbors: Vec<Vec<usize>>,
    transform: WeightsTransform,
}

impl WeightsMatrix {
    /// Undirected graph from an edge list. Duplicate edges collapse; self
    /// loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Domain(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::Domain(format!("self loop at {a}")));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(WeightsMatrix {
            neighbors,
            transform: WeightsTransform::Binary,
        })
    }

    /// Row-major `rows x cols` lattice; `wrap` joins the first and last columns.
    pub fn grid(rows: usize, cols: usize, queen: bool, wrap: bool) -> Self {
        let idx = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let east = |dr: isize| {
                    let rr = r as isize + dr;
                    if rr < 0 || rr >= rows as isize {
                        return None;
                    }
                    let cc = if c + 1 < cols {
                        c + 1
                    } else if wrap && cols > 1 {
                        0
                    } else {
                        return None;
                    };
                    Some(idx(rr as usize, cc))
                };
                let here = idx(r, c);
                if let Some(e) = east(0) {
                    edges.push((here, e));
                }
                if queen {
                    if let Some(e) = east(-1) {
                        edges.push((here, e));
                    }
                    if let Some(e) = east(1) {
                        edges.push((here, e));
                    }
                }
                if r + 1 < rows {
                    edges.push((here, idx(r + 1, c)));
                }
            }
        }
        edges.retain(|(a, b)| a != b);
        Self::from_edges(rows * cols, &edges).expect("lattice edges are in range")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path edges are in range")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("cycle edges are in range")
    }

    pub fn row_standardized(mut self) -> Self {
        self.transform = WeightsTransform::Row;
        self
    }

    pub fn with_transform(mut self, transform: WeightsTransform) -> Self {
        self.transform = transform;
        self
    }

    pub fn transform(&self) -> WeightsTransform {
        self.transform
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    fn row_weight(&self, i: usize) -> f64 {
        match self.transform {
            WeightsTransform::Binary => 1.0,
            WeightsTransform::Row => 1.0 / self.neighbors[i].len() as f64,
        }
    }

    /// Sum of all weights.
    pub fn s0(&self) -> f64 {
        (0..self.n())
            .filter(|&i| !self.neighbors[i].is_empty())
            .map(|i| self.row_weight(i) * self.neighbors[i].len() as f64)
            .sum()
    }

    /// Induced subgraph on `keep` (sorted ascending), renumbered in that order.
    pub fn subset(&self, keep: &[usize]) -> WeightsMatrix {
        let mut new_index = vec![usize::MAX; self.n()];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let neighbors = keep
            .iter()
            .map(|&i| {
                self.neighbors[i]
                    .iter()
                    .filter_map(|&j| (new_index[j] != usize::MAX).then(|| new_index[j]))
                    .collect()
            })
            .collect();
        WeightsMatrix {
            neighbors,
            transform: self.transform,
        }
    }

    /// `sum_ij w_ij z_i z_j`.
    fn cross_product(&self, z: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, list) in self.neighbors.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let lag: f64 = list.iter().map(|&j| z[j]).sum();
            total += self.row_weight(i) * z[i] * lag;
        }
        total
    }
}

/// Weights of `kind` over the regions of `partition`. The kind must suit
/// the scheme: grid kinds need a grid, `lat_path` latitude strips and
/// `lon_cycle` longitude strips.
pub fn build_weights(partition: &Partition, kind: WeightsKind) -> Result<WeightsMatrix> {
    let scheme = partition.scheme();
    let w = match (kind, scheme) {
        (WeightsKind::GridRookWrap, PartitionScheme::Grid { .. }) => {
            WeightsMatrix::grid(partition.rows(), partition.cols(), false, true)
        }
        (WeightsKind::GridQueenWrap, PartitionScheme::Grid { .. }) => {
            WeightsMatrix::grid(partition.rows(), partition.cols(), true, true)
        }
        (WeightsKind::LatPath, PartitionScheme::LatStrips { .. }) => {
            WeightsMatrix::path(partition.len())
        }
        (WeightsKind::LonCycle, PartitionScheme::LonStrips { .. }) => {
            WeightsMatrix::cycle(partition.len())
        }
        _ => {
            return Err(Error::Domain(format!(
                "weights {kind} do not apply to a {} partition",
                scheme.kind()
            )))
        }
    };
    if w.edge_count() == 0 {
        return Err(Error::Domain(format!("{kind} over {scheme} has no edges")));
    }
    Ok(w)
}

/// Values with nulls dropped and the weights restricted to what remains,
/// ready for repeated evaluation of Moran's I.
#[derive(Debug, Clone)]
pub struct MoranInput {
    z: Vec<f64>,
    weights: WeightsMatrix,
    s0: f64,
    sum_sq: f64,
}

impl MoranInput {
    pub fn new(values: &[Option<f64>], weights: &WeightsMatrix) -> Result<Self> {
        if values.len() != weights.n() {
            return Err(Error::LengthMismatch(values.len(), weights.n()));
        }
        let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
        if keep.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} non-null values, need >= 2",
                keep.len()
            )));
        }
        let x: Vec<f64> = keep.iter().map(|&i| values[i].unwrap()).collect();
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value {bad}")));
        }
        let weights = if keep.len() == values.len() {
            weights.clone()
        } else {
            weights.subset(&keep)
        };
        let s0 = weights.s0();
        if s0 == 0.0 {
            return Err(Error::InsufficientData(String::from(
                "no neighbouring pairs among non-null regions (S0 = 0)",
            )));
        }
        let m = mean(&x);
        let z: Vec<f64> = x.iter().map(|v| v - m).collect();
        let sum_sq: f64 = z.iter().map(|v| v * v).sum();
        if sum_sq == 0.0 {
            return Err(Error::ZeroVariance(String::from("all region values are equal")));
        }
        Ok(MoranInput {
            z,
            weights,
            s0,
            sum_sq,
        })
    }

    pub fn n_used(&self) -> usize {
        self.z.len()
    }

    /// `-1 / (n - 1)`.
    pub fn expected(&self) -> f64 {
        -1.0 / (self.n_used() as f64 - 1.0)
    }

    fn statistic_of(&self, z: &[f64]) -> f64 {
        self.n_used() as f64 / self.s0 * self.weights.cross_product(z) / self.sum_sq
    }

    /// Observed Moran's I.
    pub fn statistic(&self) -> f64 {
        self.statistic_of(&self.z)
    }

    /// Moran's I after the `k`-th random relabelling, drawn from the
    /// substream `"perm:k"` of `rng`. Independent of evaluation order.
    pub fn permuted_statistic(&self, rng: &RngStream, k: usize) -> f64 {
        let mut stream = rng.substream(&format!("perm:{k}"));
        let mut z = self.z.clone();
        stream.shuffle(&mut z);
        self.statistic_of(&z)
    }
}

/// Global Moran's I. Nulls are dropped together with their rows and columns
/// of the weights.
pub fn morans_i(values: &[Option<f64>], weights: &WeightsMatrix) -> Result<f64> {
    MoranInput::new(values, weights).map(|m| m.statistic())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoranResult {
    pub i_obs: f64,
    pub e_null: f64,
    /// One-sided upper tail, `(1 + #{I_perm >= I_obs}) / (n_perm + 1)`.
    pub pseudo_p: f64,
    pub z_sim: f64,
    pub n_perm: usize,
    pub n_used: usize,
}

impl MoranResult {
    /// Summarizes permutation statistics listed in permutation order.
    pub fn from_permutations(input: &MoranInput, permuted: &[f64]) -> Result<Self> {
        let n_perm = permuted.len();
        if n_perm < 2 {
            return Err(Error::InsufficientData(format!("{n_perm} permutations, need >= 2")));
        }
        let i_obs = input.statistic();
        let sd = sample_sd(permuted);
        if sd == 0.0 {
            return Err(Error::Degenerate(String::from(
                "permutation distribution has zero spread",
            )));
        }
        let extreme = permuted.iter().filter(|&&v| v >= i_obs).count();
        Ok(MoranResult {
            i_obs,
            e_null: input.expected(),
            pseudo_p: (1 + extreme) as f64 / (n_perm + 1) as f64,
            z_sim: (i_obs - mean(permuted)) / sd,
            n_perm,
            n_used: input.n_used(),
        })
    }
}

/// Moran's I with a permutation test; permutation `k` uses substream
/// `"perm:k"` of `rng`.
pub fn moran_permutation_test(
    values: &[Option<f64>],
    weights: &WeightsMatrix,
    n_perm: usize,
    rng: &RngStream,
) -> Result<MoranResult> {
    let input = MoranInput::new(values, weights)?;
    let permuted: Vec<f64> = (0..n_perm).map(|k| input.permuted_statistic(rng, k)).collect();
    MoranResult::from_permutations(&input, &permuted)
}
