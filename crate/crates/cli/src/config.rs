//! Run configuration shared by the command line and the library entry
//! point, with parsers for the inline flag syntaxes.

use std::path::PathBuf;

use spassoc_core::global::{StatKind, Variant};
use spassoc_core::inference::{Alternative, PermutationPlan, PermutationScheme};
use spassoc_core::weights::{NeighborSpec, Standardization};

use crate::error::{CliError, Result};

/// Where the weight matrix comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    /// Built from the lattice geometry/centroids.
    Spec(NeighborSpec),
    /// Loaded from a .gal adjacency file.
    GalFile(PathBuf),
    /// Loaded from a .gwt triple file.
    GwtFile(PathBuf),
}

/// Weight construction options common to all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightConfig {
    pub source: WeightSource,
    pub standardize: Standardization,
    pub snap: f64,
    pub strict: bool,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            source: WeightSource::Spec(NeighborSpec::QueenContiguity),
            standardize: Standardization::RowStandardized,
            snap: 0.0,
            strict: false,
        }
    }
}

/// Which statistic family/variant a global or map command computes.
#[derive(Debug, Clone, PartialEq)]
pub struct StatConfig {
    pub kind: StatKind,
    pub variant: Variant,
    pub var_i: String,
    pub var_j: Option<String>,
    pub given: Vec<String>,
    /// Compute the single-conditioner partial through the
    /// three-component recursion instead of residualization.
    pub recursion: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Build a weight matrix and persist it (.gal binary adjacency or
    /// .gwt triples).
    Weights { out: PathBuf },
    /// A global statistic, optionally with permutation inference.
    Global {
        stat: StatConfig,
        permutations: Option<u32>,
        out: Option<PathBuf>,
    },
    /// A per-site local map written as CSV.
    Local { stat: StatConfig, out: PathBuf },
    /// Local map + conditional permutation + quadrant classification.
    SigMap {
        stat: StatConfig,
        permutations: u32,
        alpha: f64,
        fdr: bool,
        out: Option<PathBuf>,
        geojson_out: Option<PathBuf>,
    },
    /// Simulated field(s) written as a CSV attribute table.
    Simulate {
        grid: Option<(usize, usize)>,
        rho: f64,
        noise_sd: f64,
        common_driver: bool,
        loading_i: f64,
        loading_j: f64,
        obs_noise_sd: f64,
        out: PathBuf,
        geojson_out: Option<PathBuf>,
    },
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub attrs: Option<PathBuf>,
    pub weights: WeightConfig,
    pub seed: u64,
    pub alternative: Alternative,
    pub threads: Option<usize>,
    pub command: Command,
}

impl RunConfig {
    pub fn plan(&self, replicates: u32, scheme: PermutationScheme) -> PermutationPlan {
        PermutationPlan { replicates, seed: self.seed, scheme, alternative: self.alternative }
    }
}

/// Parses `queen | rook | knn:k | dist:d | band:d1,d2` or a .gal/.gwt
/// path.
pub fn parse_weight_source(text: &str) -> Result<WeightSource> {
    let lower = text.to_ascii_lowercase();
    if lower.ends_with(".gal") {
        return Ok(WeightSource::GalFile(PathBuf::from(text)));
    }
    if lower.ends_with(".gwt") {
        return Ok(WeightSource::GwtFile(PathBuf::from(text)));
    }
    let spec = match lower.as_str() {
        "queen" => NeighborSpec::QueenContiguity,
        "rook" => NeighborSpec::RookContiguity,
        _ => {
            let (head, tail) = lower
                .split_once(':')
                .ok_or_else(|| bad_config(text, "expected queen|rook|knn:k|dist:d|band:d1,d2"))?;
            match head {
                "knn" => {
                    let k: usize =
                        tail.parse().map_err(|_| bad_config(text, "knn wants an integer k"))?;
                    NeighborSpec::KNearest(k)
                }
                "dist" => {
                    let d: f64 =
                        tail.parse().map_err(|_| bad_config(text, "dist wants a distance"))?;
                    NeighborSpec::DistanceThreshold(d)
                }
                "band" => {
                    let (lo, hi) = tail
                        .split_once(',')
                        .ok_or_else(|| bad_config(text, "band wants 'lower,upper'"))?;
                    let lo: f64 =
                        lo.parse().map_err(|_| bad_config(text, "band lower bound"))?;
                    let hi: f64 =
                        hi.parse().map_err(|_| bad_config(text, "band upper bound"))?;
                    NeighborSpec::DistanceBand(lo, hi)
                }
                _ => return Err(bad_config(text, "unknown weight criterion")),
            }
        }
    };
    Ok(WeightSource::Spec(spec))
}

fn bad_config(text: &str, hint: &str) -> CliError {
    CliError::Config(format!("weight spec '{text}': {hint}"))
}

pub fn parse_standardize(text: &str) -> Result<Standardization> {
    match text.to_ascii_lowercase().as_str() {
        "row" => Ok(Standardization::RowStandardized),
        "binary" => Ok(Standardization::Binary),
        other => Err(CliError::Config(format!("--standardize must be row|binary, got '{other}'"))),
    }
}

pub fn parse_alternative(text: &str) -> Result<Alternative> {
    match text.to_ascii_lowercase().as_str() {
        "two-sided" | "twosided" | "two_sided" => Ok(Alternative::TwoSided),
        "greater" => Ok(Alternative::Greater),
        "less" => Ok(Alternative::Less),
        other => Err(CliError::Config(format!(
            "--alternative must be two-sided|greater|less, got '{other}'"
        ))),
    }
}

/// Parses `--stat` (with optional combined kind-variant aliases like
/// `moran-partial`) together with an optional explicit `--variant`.
pub fn parse_stat(stat: &str, variant: Option<&str>) -> Result<(StatKind, Variant)> {
    let lower = stat.to_ascii_lowercase();
    let (kind_text, implied) = match lower.split_once('-') {
        Some((k, v)) => (k.to_string(), Some(v.to_string())),
        None => (lower, None),
    };
    let kind = match kind_text.as_str() {
        "moran" => StatKind::MoranI,
        "geary" => StatKind::GearyC,
        other => return Err(CliError::Config(format!("--stat must be moran|geary, got '{other}'"))),
    };
    let variant_text = match (implied, variant) {
        (Some(a), Some(b)) if a != b.to_ascii_lowercase() => {
            return Err(CliError::Config(format!(
                "--stat implies variant '{a}' but --variant says '{b}'"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b.to_ascii_lowercase(),
        (None, None) => "uni".to_string(),
    };
    let variant = match variant_text.as_str() {
        "uni" | "univariate" => Variant::Univariate,
        "biv" | "bivariate" => Variant::Bivariate,
        "partial" => Variant::Partial,
        "semipartial" | "semi-partial" | "semi" => Variant::SemiPartial,
        other => {
            return Err(CliError::Config(format!(
                "--variant must be uni|biv|partial|semipartial, got '{other}'"
            )))
        }
    };
    Ok((kind, variant))
}

pub fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let (r, c) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Config(format!("--grid wants ROWSxCOLS, got '{text}'")))?;
    let rows: usize =
        r.parse().map_err(|_| CliError::Config(format!("grid rows '{r}'")))?;
    let cols: usize =
        c.parse().map_err(|_| CliError::Config(format!("grid cols '{c}'")))?;
    if rows * cols < 2 {
        return Err(CliError::Config("grid needs at least two sites".into()));
    }
    Ok((rows, cols))
}

/// Validates a statistic configuration against its variant invariants.
pub fn validate_stat(stat: &StatConfig) -> Result<()> {
    match stat.variant {
        Variant::Univariate => {
            if stat.var_j.is_some() || !stat.given.is_empty() {
                return Err(CliError::Config(
                    "univariate statistics take a single variable (--var/--i)".into(),
                ));
            }
        }
        Variant::Bivariate => {
            if stat.var_j.is_none() {
                return Err(CliError::Config("bivariate statistics need --j".into()));
            }
            if !stat.given.is_empty() {
                return Err(CliError::Config(
                    "bivariate statistics take no conditioning list".into(),
                ));
            }
        }
        Variant::Partial => {
            if stat.var_j.is_none() {
                return Err(CliError::Config("partial statistics need --j".into()));
            }
            if stat.given.is_empty() {
                return Err(CliError::Config(
                    "partial statistics need a nonempty --given list".into(),
                ));
            }
            if stat.recursion && stat.given.len() != 1 {
                return Err(CliError::Config(
                    "the recursion mode conditions on exactly one variable".into(),
                ));
            }
        }
        Variant::SemiPartial => {
            if stat.var_j.is_none() {
                return Err(CliError::Config("semi-partial statistics need --j".into()));
            }
            if stat.given.len() != 1 {
                return Err(CliError::Config(
                    "semi-partial statistics condition on exactly one variable".into(),
                ));
            }
        }
    }
    Ok(())
}
