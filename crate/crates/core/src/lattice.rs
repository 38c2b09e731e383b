//! Domain model for the spatial lattice: sites, optional polygon
//! geometry, centroids and the attribute table observed on the sites.
//!
//! Site order is canonical: the order of first appearance in the
//! lattice source defines matrix/vector index `0..n-1` for every other
//! module. All types are immutable after construction and safe to share
//! across threads.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric;

/// A planar point. Coordinates are treated as projected/dimensionless;
/// no geodesic computation is performed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        libm::sqrt(dx * dx + dy * dy)
    }
}

/// One polygon ring, stored open (no repeated closing vertex).
pub type Ring = Vec<Point>;

/// Identifier of a lattice site; non-empty and unique within a lattice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(String);

impl SiteId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidNeighborSpec {
                reason: "empty site id".to_string(),
            });
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl core::fmt::Display for SiteId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.0)
    }
}

/// The set of sites with optional polygon geometry and centroids.
#[derive(Debug, Clone)]
pub struct Lattice {
    ids: Vec<SiteId>,
    index: BTreeMap<String, usize>,
    geometry: Vec<Option<Vec<Ring>>>,
    centroids: Vec<Option<Point>>,
}

impl Lattice {
    /// Builds a lattice from parallel per-site vectors. Rings may be
    /// given closed (first vertex repeated at the end) or open; they
    /// are canonicalized to open form. A closed ring must carry at
    /// least three distinct vertices.
    pub fn from_parts(
        ids: Vec<SiteId>,
        geometry: Vec<Option<Vec<Ring>>>,
        centroids: Vec<Option<Point>>,
    ) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::TooFewSites { n, required: 2 });
        }
        if geometry.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: geometry.len() });
        }
        if centroids.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: centroids.len() });
        }
        let mut index = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.as_str().to_string(), i).is_some() {
                return Err(Error::DuplicateSite { id: id.as_str().to_string() });
            }
        }
        let mut canonical = Vec::with_capacity(n);
        for (site, rings) in ids.iter().zip(geometry) {
            match rings {
                None => canonical.push(None),
                Some(rings) => {
                    let mut open_rings = Vec::with_capacity(rings.len());
                    for ring in rings {
                        open_rings.push(canonical_ring(site, ring)?);
                    }
                    canonical.push(Some(open_rings));
                }
            }
        }
        Ok(Self { ids, index, geometry: canonical, centroids })
    }

    /// A lattice carrying only site ids (no geometry), as produced by
    /// adjacency files or attribute-only workflows.
    pub fn from_ids(ids: Vec<SiteId>) -> Result<Self> {
        let n = ids.len();
        Lattice::from_parts(ids, vec![None; n], vec![None; n])
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[SiteId] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn rings(&self, site: usize) -> Option<&[Ring]> {
        self.geometry[site].as_deref()
    }

    pub fn has_geometry(&self, site: usize) -> bool {
        self.geometry[site].is_some()
    }

    /// Centroid of one site: the stored point if present, otherwise the
    /// area-weighted mean of the per-ring shoelace centroids.
    pub fn centroid(&self, site: &SiteId) -> Result<Point> {
        let idx = self.index_of(site.as_str()).ok_or_else(|| Error::UnknownSite {
            id: site.as_str().to_string(),
        })?;
        self.centroid_at(idx)
    }

    /// Centroid by canonical site index.
    pub fn centroid_at(&self, site: usize) -> Result<Point> {
        if let Some(p) = self.centroids[site] {
            return Ok(p);
        }
        match &self.geometry[site] {
            Some(rings) if !rings.is_empty() => Ok(rings_centroid(rings)),
            _ => Err(Error::MissingGeometry {
                site: self.ids[site].as_str().to_string(),
            }),
        }
    }

    /// Centroids of every site in canonical order.
    pub fn all_centroids(&self) -> Result<Vec<Point>> {
        (0..self.len()).map(|i| self.centroid_at(i)).collect()
    }
}

fn canonical_ring(site: &SiteId, mut ring: Ring) -> Result<Ring> {
    if ring.len() >= 2 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::MalformedRing {
            site: site.as_str().to_string(),
            reason: "fewer than three distinct vertices",
        });
    }
    Ok(ring)
}

/// Shoelace signed area (open ring).
fn ring_area_signed(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Shoelace centroid of one ring; degenerate (zero-area) rings fall
/// back to the vertex mean.
fn ring_centroid(ring: &[Point]) -> (Point, f64) {
    let n = ring.len();
    let area = ring_area_signed(ring);
    if area.abs() < 1e-300 {
        let cx = numeric::mean(&ring.iter().map(|p| p.x).collect::<Vec<_>>());
        let cy = numeric::mean(&ring.iter().map(|p| p.y).collect::<Vec<_>>());
        return (Point::new(cx, cy), 0.0);
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let cross = a.x * b.y - b.x * a.y;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    let scale = 1.0 / (6.0 * area);
    (Point::new(cx * scale, cy * scale), area.abs())
}

/// Area-weighted mean of per-ring centroids; all-degenerate geometry
/// falls back to the unweighted mean of ring centroids.
fn rings_centroid(rings: &[Ring]) -> Point {
    let parts: Vec<(Point, f64)> = rings.iter().map(|r| ring_centroid(r)).collect();
    let total: f64 = parts.iter().map(|(_, a)| a).sum();
    if total <= 0.0 {
        let cx = numeric::mean(&parts.iter().map(|(p, _)| p.x).collect::<Vec<_>>());
        let cy = numeric::mean(&parts.iter().map(|(p, _)| p.y).collect::<Vec<_>>());
        return Point::new(cx, cy);
    }
    let cx: f64 = parts.iter().map(|(p, a)| p.x * a).sum::<f64>() / total;
    let cy: f64 = parts.iter().map(|(p, a)| p.y * a).sum::<f64>() / total;
    Point::new(cx, cy)
}

/// Named real-valued variables over the lattice sites, aligned to the
/// canonical site order.
#[derive(Debug, Clone)]
pub struct AttributeTable {
    n: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    index: BTreeMap<String, usize>,
}

impl AttributeTable {
    /// Builds a table from columns already in lattice site order.
    pub fn new(lattice: &Lattice, variables: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let n = lattice.len();
        if variables.is_empty() {
            return Err(Error::InvalidConditioning {
                reason: "attribute table needs at least one variable".to_string(),
            });
        }
        let mut names = Vec::with_capacity(variables.len());
        let mut columns = Vec::with_capacity(variables.len());
        let mut index = BTreeMap::new();
        for (name, values) in variables {
            if values.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: values.len() });
            }
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { name, row });
            }
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(Error::DuplicateVariable { name });
            }
            names.push(name);
            columns.push(values);
        }
        Ok(Self { n, names, columns, index })
    }

    /// Builds a table from `(site id, row values)` records in arbitrary
    /// order; rows are aligned to the canonical lattice order. Every
    /// lattice site must appear exactly once.
    pub fn from_rows(
        lattice: &Lattice,
        names: Vec<String>,
        rows: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let n = lattice.len();
        let d = names.len();
        let mut columns = vec![vec![f64::NAN; n]; d];
        let mut seen = vec![false; n];
        for (id, values) in rows {
            let site = lattice
                .index_of(&id)
                .ok_or_else(|| Error::UnknownSite { id: id.clone() })?;
            if seen[site] {
                return Err(Error::DuplicateSite { id });
            }
            seen[site] = true;
            if values.len() != d {
                return Err(Error::LengthMismatch { expected: d, got: values.len() });
            }
            for (col, v) in columns.iter_mut().zip(values) {
                col[site] = v;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::MissingSite {
                id: lattice.ids()[missing].as_str().to_string(),
            });
        }
        AttributeTable::new(lattice, names.into_iter().zip(columns).collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// The value vector of one variable in canonical site order.
    pub fn variable(&self, name: &str) -> Result<&[f64]> {
        self.index
            .get(name)
            .map(|&i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownVariable { name: name.to_string() })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}
