//! Spatial association measures for multivariate areal lattice data.
//!
//! The crate computes global, local, bivariate, partial and
//! semi-partial variants of Moran's I and Geary's C over a sparse
//! spatial weight matrix, together with permutation-based inference,
//! hotspot/coldspot quadrant classification and lattice-field
//! simulation for validation.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command
//! line live in the companion `spassoc-cli` crate. All computations are
//! deterministic: summations run in a fixed pairwise order, random
//! streams are derived per unit of work from an explicit seed, and
//! results are independent of how callers schedule the work.

#![no_std]
// negated float comparisons are deliberate: the guards must also
// reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod conditioning;
pub mod error;
pub mod global;
pub mod inference;
pub mod lattice;
pub mod local;
pub mod numeric;
pub mod rng;
pub mod synthetic;
pub mod weights;

pub use error::{Error, Result};
pub use global::{AssocResult, StatKind, Variant};
pub use inference::{Alternative, PermutationPlan, PermutationScheme, QuadrantClass, SignificanceMap};
pub use lattice::{AttributeTable, Lattice, Point, SiteId};
pub use weights::{NeighborSpec, Standardization, WeightMatrix};
