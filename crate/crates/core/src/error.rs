//! Error type shared by all core modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by lattice construction, weight building and the
/// association statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A site has neither polygon geometry nor a stored centroid.
    MissingGeometry { site: String },
    /// A variable name is not present in the attribute table.
    UnknownVariable { name: String },
    /// Two vectors (or a vector and a matrix) disagree in length.
    LengthMismatch { expected: usize, got: usize },
    /// A lattice has fewer sites than the operation requires.
    TooFewSites { n: usize, required: usize },
    /// A weight build produced an empty matrix under strict mode.
    DegenerateLattice,
    /// A neighbour specification is internally inconsistent.
    InvalidNeighborSpec { reason: String },
    /// Weight entries violate the matrix invariants (self loops,
    /// negative values, mode mismatch).
    InvalidWeights { reason: String },
    /// A statistic input has (numerically) zero sample variance.
    ZeroVariance,
    /// The weight matrix carries no entries (s0 = 0).
    EmptyWeights,
    /// The conditioning design is numerically rank deficient.
    RankDeficient,
    /// A partial/semi-partial denominator guard failed (1 - a^2 too small).
    DegenerateConditioning,
    /// The conditioning set violates its invariants (duplicate targets,
    /// target inside the given list, too few observations, ...).
    InvalidConditioning { reason: String },
    /// The linear system of a simulation is numerically singular.
    SingularSystem,
    /// An autoregressive coefficient is outside the stable range.
    RhoOutOfRange { rho: f64, bound: f64 },
    /// A lattice id occurs twice.
    DuplicateSite { id: String },
    /// A variable name occurs twice in an attribute table.
    DuplicateVariable { name: String },
    /// A data row references an id that is not in the lattice.
    UnknownSite { id: String },
    /// A lattice site has no matching data row.
    MissingSite { id: String },
    /// A value is NaN or infinite where a finite real is required.
    NonFiniteValue { name: String, row: usize },
    /// A polygon ring is not closed or has too few vertices.
    MalformedRing { site: String, reason: &'static str },
    /// A permutation plan violates its invariants.
    InvalidPlan { reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MissingGeometry { site } => {
                write!(f, "site '{site}' has neither geometry nor a centroid")
            }
            Error::UnknownVariable { name } => write!(f, "unknown variable '{name}'"),
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::TooFewSites { n, required } => {
                write!(f, "lattice has {n} sites, at least {required} required")
            }
            Error::DegenerateLattice => write!(f, "weight specification yields an empty matrix"),
            Error::InvalidNeighborSpec { reason } => {
                write!(f, "invalid neighbour specification: {reason}")
            }
            Error::InvalidWeights { reason } => write!(f, "invalid weight matrix: {reason}"),
            Error::ZeroVariance => write!(f, "input has zero sample variance"),
            Error::EmptyWeights => write!(f, "weight matrix has no entries"),
            Error::RankDeficient => write!(f, "conditioning design is rank deficient"),
            Error::DegenerateConditioning => {
                write!(f, "conditioning denominator is degenerate (|a| too close to 1)")
            }
            Error::InvalidConditioning { reason } => {
                write!(f, "invalid conditioning set: {reason}")
            }
            Error::SingularSystem => write!(f, "linear system is numerically singular"),
            Error::RhoOutOfRange { rho, bound } => {
                write!(f, "rho = {rho} is outside the stable range (|rho| < {bound})")
            }
            Error::DuplicateSite { id } => write!(f, "duplicate site id '{id}'"),
            Error::DuplicateVariable { name } => write!(f, "duplicate variable name '{name}'"),
            Error::UnknownSite { id } => write!(f, "row references unknown site id '{id}'"),
            Error::MissingSite { id } => write!(f, "no data row for site id '{id}'"),
            Error::NonFiniteValue { name, row } => {
                write!(f, "variable '{name}' has a non-finite value at row {row}")
            }
            Error::MalformedRing { site, reason } => {
                write!(f, "malformed polygon ring for site '{site}': {reason}")
            }
            Error::InvalidPlan { reason } => write!(f, "invalid permutation plan: {reason}"),
        }
    }
}

impl core::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
