//! Construction and transformation of the sparse spatial proximity
//! matrix: contiguity (queen/rook), k-nearest-neighbour, distance
//! threshold, distance bands and higher-order neighbourhoods.
//!
//! The matrix is stored in compressed sparse row form with entries
//! sorted by `(row, col)`, which fixes the evaluation order of every
//! downstream sum.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Point};
use crate::numeric::pairwise_sum;

/// How the stored weights are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Standardization {
    /// Stored weights are exactly 1; absent entries are 0.
    Binary,
    /// Each non-empty row sums to 1.
    RowStandardized,
}

/// Neighbourhood criterion for building a weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum NeighborSpec {
    /// Polygons sharing at least one boundary point.
    QueenContiguity,
    /// Polygons sharing a boundary segment of positive length.
    RookContiguity,
    /// The k nearest distinct sites by centroid distance. Ties are
    /// broken by ascending site index; the relation need not be
    /// symmetric.
    KNearest(usize),
    /// Sites with intercentroidal distance `<= threshold`.
    DistanceThreshold(f64),
    /// Sites with intercentroidal distance in `[lower, upper)`.
    DistanceBand(f64, f64),
    /// Sites reachable in exactly `order` steps of the base graph and
    /// not in any lower order.
    HigherOrder(alloc::boxed::Box<NeighborSpec>, usize),
}

impl NeighborSpec {
    fn validate(&self) -> Result<()> {
        match self {
            NeighborSpec::KNearest(k) if *k == 0 => Err(Error::InvalidNeighborSpec {
                reason: "k must be positive".to_string(),
            }),
            NeighborSpec::DistanceThreshold(t) if !(*t > 0.0) => {
                Err(Error::InvalidNeighborSpec {
                    reason: "distance threshold must be positive".to_string(),
                })
            }
            NeighborSpec::DistanceBand(lo, hi) if !(*lo >= 0.0 && lo < hi) => {
                Err(Error::InvalidNeighborSpec {
                    reason: "distance band requires 0 <= lower < upper".to_string(),
                })
            }
            NeighborSpec::HigherOrder(base, order) => {
                if *order == 0 {
                    return Err(Error::InvalidNeighborSpec {
                        reason: "order must be positive".to_string(),
                    });
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Options for weight construction.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Snapping grid for shared-boundary detection. 0 means exact
    /// coordinate matching; a positive value quantizes coordinates to
    /// multiples of `snap` before comparison.
    pub snap: f64,
    /// When set, an empty result matrix is an error.
    pub strict: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { snap: 0.0, strict: false }
    }
}

/// Sparse n-by-n proximity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    indptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    standardization: Standardization,
    symmetric: bool,
    s0: f64,
}

impl WeightMatrix {
    /// Builds a matrix from `(row, col, weight)` triplets. Duplicate
    /// coordinates are summed; zero weights are dropped; self loops and
    /// negative weights are rejected; the declared standardization mode
    /// is verified.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        standardization: Standardization,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, w) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidWeights {
                    reason: format!("entry ({i}, {j}) outside a {n}-site lattice"),
                });
            }
            if i == j {
                return Err(Error::InvalidWeights {
                    reason: format!("self weight at site {i}"),
                });
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeights {
                    reason: format!("weight {w} at ({i}, {j}) is not a finite nonnegative real"),
                });
            }
            if w > 0.0 {
                entries.push((i, j, w));
            }
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => merged.push((i, j, w)),
            }
        }
        let mut indptr = vec![0usize; n + 1];
        for &(i, _, _) in &merged {
            indptr[i + 1] += 1;
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        let cols: Vec<usize> = merged.iter().map(|e| e.1).collect();
        let vals: Vec<f64> = merged.iter().map(|e| e.2).collect();
        let s0 = pairwise_sum(&vals);
        let mut w = Self { n, indptr, cols, vals, standardization, symmetric: false, s0 };
        w.verify_mode()?;
        w.symmetric = w.compute_symmetric();
        Ok(w)
    }

    fn verify_mode(&self) -> Result<()> {
        match self.standardization {
            Standardization::Binary => {
                if self.vals.iter().any(|&v| v != 1.0) {
                    return Err(Error::InvalidWeights {
                        reason: "binary mode requires every stored weight to be 1".to_string(),
                    });
                }
            }
            Standardization::RowStandardized => {
                for i in 0..self.n {
                    let row = &self.vals[self.indptr[i]..self.indptr[i + 1]];
                    if !row.is_empty() {
                        let sum = pairwise_sum(row);
                        if (sum - 1.0).abs() > 1e-12 {
                            return Err(Error::InvalidWeights {
                                reason: format!("row {i} sums to {sum}, expected 1"),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_symmetric(&self) -> bool {
        for i in 0..self.n {
            for idx in self.indptr[i]..self.indptr[i + 1] {
                let j = self.cols[idx];
                if self.get(j, i) != self.vals[idx] {
                    return false;
                }
            }
        }
        true
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Sum of all weights (s0).
    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Column indices and weights of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    /// Stored weight at `(i, j)`, 0 when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        pairwise_sum(self.row(i).1)
    }

    pub fn is_island(&self, i: usize) -> bool {
        self.degree(i) == 0
    }

    pub fn island_mask(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.is_island(i)).collect()
    }

    /// All stored entries in `(row, col, weight)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &w)| (i, j, w))
        })
    }
}

/// Builds a binary weight matrix with default options.
pub fn build_weights(lattice: &Lattice, spec: &NeighborSpec) -> Result<WeightMatrix> {
    build_weights_with(lattice, spec, &BuildOptions::default())
}

/// Builds a binary weight matrix from the given neighbourhood
/// criterion.
pub fn build_weights_with(
    lattice: &Lattice,
    spec: &NeighborSpec,
    opts: &BuildOptions,
) -> Result<WeightMatrix> {
    spec.validate()?;
    let pairs: BTreeSet<(usize, usize)> = match spec {
        NeighborSpec::QueenContiguity => contiguity_pairs(lattice, opts.snap, false)?,
        NeighborSpec::RookContiguity => contiguity_pairs(lattice, opts.snap, true)?,
        NeighborSpec::KNearest(k) => knn_pairs(lattice, *k)?,
        NeighborSpec::DistanceThreshold(t) => band_pairs(lattice, 0.0, *t, true)?,
        NeighborSpec::DistanceBand(lo, hi) => band_pairs(lattice, *lo, *hi, false)?,
        NeighborSpec::HigherOrder(base, order) => {
            let base_w = build_weights_with(lattice, base, opts)?;
            return higher_order_checked(&base_w, *order, opts.strict);
        }
    };
    let w = WeightMatrix::from_triplets(
        lattice.len(),
        pairs.into_iter().map(|(i, j)| (i, j, 1.0)),
        Standardization::Binary,
    )?;
    if opts.strict && w.nnz() == 0 {
        return Err(Error::DegenerateLattice);
    }
    Ok(w)
}

/// Quantized coordinate key; exact bit pattern when `snap` is 0.
fn coord_key(p: Point, snap: f64) -> (u64, u64) {
    let norm = |v: f64| if v == 0.0 { 0.0 } else { v };
    if snap > 0.0 {
        let q = |v: f64| (libm::round(v / snap) as i64) as u64;
        (q(p.x), q(p.y))
    } else {
        (norm(p.x).to_bits(), norm(p.y).to_bits())
    }
}

fn contiguity_pairs(
    lattice: &Lattice,
    snap: f64,
    rook: bool,
) -> Result<BTreeSet<(usize, usize)>> {
    let n = lattice.len();
    type VKey = (u64, u64);
    let mut buckets: BTreeMap<(VKey, VKey), Vec<usize>> = BTreeMap::new();
    let mut vertex_buckets: BTreeMap<VKey, Vec<usize>> = BTreeMap::new();
    for site in 0..n {
        let rings = lattice.rings(site).ok_or_else(|| Error::MissingGeometry {
            site: lattice.ids()[site].as_str().to_string(),
        })?;
        for ring in rings {
            let keys: Vec<VKey> = ring.iter().map(|&p| coord_key(p, snap)).collect();
            if rook {
                let m = keys.len();
                for t in 0..m {
                    let a = keys[t];
                    let b = keys[(t + 1) % m];
                    if a == b {
                        continue; // zero-length under snapping
                    }
                    let edge = if a <= b { (a, b) } else { (b, a) };
                    let bucket = buckets.entry(edge).or_default();
                    if bucket.last() != Some(&site) {
                        bucket.push(site);
                    }
                }
            } else {
                for &k in &keys {
                    let bucket = vertex_buckets.entry(k).or_default();
                    if bucket.last() != Some(&site) {
                        bucket.push(site);
                    }
                }
            }
        }
    }
    let mut pairs = BTreeSet::new();
    let mut link_bucket = |sites: &[usize]| {
        for a in 0..sites.len() {
            for b in a + 1..sites.len() {
                if sites[a] != sites[b] {
                    pairs.insert((sites[a], sites[b]));
                    pairs.insert((sites[b], sites[a]));
                }
            }
        }
    };
    if rook {
        for sites in buckets.values() {
            link_bucket(sites);
        }
    } else {
        for sites in vertex_buckets.values() {
            link_bucket(sites);
        }
    }
    Ok(pairs)
}

fn knn_pairs(lattice: &Lattice, k: usize) -> Result<BTreeSet<(usize, usize)>> {
    let n = lattice.len();
    if k >= n {
        return Err(Error::InvalidNeighborSpec {
            reason: format!("k = {k} requires at least {} sites, lattice has {n}", k + 1),
        });
    }
    let centroids = lattice.all_centroids()?;
    let mut pairs = BTreeSet::new();
    for i in 0..n {
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (centroids[i].distance(&centroids[j]), j))
            .collect();
        dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        for &(_, j) in dists.iter().take(k) {
            pairs.insert((i, j));
        }
    }
    Ok(pairs)
}

fn band_pairs(
    lattice: &Lattice,
    lower: f64,
    upper: f64,
    inclusive_upper: bool,
) -> Result<BTreeSet<(usize, usize)>> {
    let n = lattice.len();
    let centroids = lattice.all_centroids()?;
    let mut pairs = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = centroids[i].distance(&centroids[j]);
            let in_band = if inclusive_upper {
                d <= upper
            } else {
                d >= lower && d < upper
            };
            if in_band {
                pairs.insert((i, j));
                pairs.insert((j, i));
            }
        }
    }
    Ok(pairs)
}

/// Exclusive higher-order neighbours: sites at graph distance exactly
/// `order` in the base graph, excluding self and every lower order.
pub fn higher_order(w: &WeightMatrix, order: usize) -> Result<WeightMatrix> {
    higher_order_checked(w, order, false)
}

fn higher_order_checked(w: &WeightMatrix, order: usize, strict: bool) -> Result<WeightMatrix> {
    if w.standardization() != Standardization::Binary {
        return Err(Error::InvalidWeights {
            reason: "higher-order neighbourhoods require a binary matrix".to_string(),
        });
    }
    if order == 0 {
        return Err(Error::InvalidNeighborSpec {
            reason: "order must be positive".to_string(),
        });
    }
    let n = w.n();
    let mut triplets = Vec::new();
    let mut dist = vec![usize::MAX; n];
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    for start in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[start] = 0;
        frontier.clear();
        frontier.push(start);
        for level in 1..=order {
            next.clear();
            for &u in frontier.iter() {
                let (cols, _) = w.row(u);
                for &v in cols {
                    if dist[v] == usize::MAX {
                        dist[v] = level;
                        next.push(v);
                    }
                }
            }
            core::mem::swap(&mut frontier, &mut next);
            if frontier.is_empty() {
                break;
            }
        }
        for &v in frontier.iter() {
            if dist[v] == order {
                triplets.push((start, v, 1.0));
            }
        }
    }
    let out = WeightMatrix::from_triplets(n, triplets, Standardization::Binary)?;
    if strict && out.nnz() == 0 {
        return Err(Error::DegenerateLattice);
    }
    Ok(out)
}

/// Scales each non-empty row to sum to 1; empty rows stay empty. The
/// symmetry flag is recomputed on the result.
pub fn row_standardize(w: &WeightMatrix) -> WeightMatrix {
    let mut vals = w.vals.clone();
    for i in 0..w.n {
        let span = w.indptr[i]..w.indptr[i + 1];
        let row = &w.vals[span.clone()];
        if !row.is_empty() {
            let sum = pairwise_sum(row);
            for v in &mut vals[span] {
                *v /= sum;
            }
        }
    }
    let s0 = pairwise_sum(&vals);
    let mut out = WeightMatrix {
        n: w.n,
        indptr: w.indptr.clone(),
        cols: w.cols.clone(),
        vals,
        standardization: Standardization::RowStandardized,
        symmetric: false,
        s0,
    };
    out.symmetric = out.compute_symmetric();
    out
}

/// Symmetrizes a binary matrix by the union rule `w'_ij = max(w_ij, w_ji)`.
pub fn symmetrize_union(w: &WeightMatrix) -> Result<WeightMatrix> {
    if w.standardization() != Standardization::Binary {
        return Err(Error::InvalidWeights {
            reason: "union symmetrization requires a binary matrix".to_string(),
        });
    }
    let mut pairs = BTreeSet::new();
    for (i, j, _) in w.entries() {
        pairs.insert((i, j));
        pairs.insert((j, i));
    }
    WeightMatrix::from_triplets(
        w.n(),
        pairs.into_iter().map(|(i, j)| (i, j, 1.0)),
        Standardization::Binary,
    )
}

/// Spatial lag `(lag)_i = sum_j w_ij x_j`. Island rows lag to 0.
pub fn spatial_lag(w: &WeightMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.n() {
        return Err(Error::LengthMismatch { expected: w.n(), got: x.len() });
    }
    let mut out = Vec::with_capacity(w.n());
    for i in 0..w.n() {
        let (cols, vals) = w.row(i);
        let mut acc = 0.0;
        for (&j, &wij) in cols.iter().zip(vals) {
            acc += wij * x[j];
        }
        out.push(acc);
    }
    Ok(out)
}
