//! CLI error type with stable machine-readable codes.

use std::path::PathBuf;

use spassoc_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("duplicate feature id '{id}'")]
    DuplicateId { id: String },
    #[error("feature {index} has no usable 'id' property")]
    MissingId { index: usize },
    #[error("value '{value}' at data row {row}, column '{column}' is not numeric")]
    NonNumericValue { row: usize, column: String, value: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported format for {path}: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Stable error code for the machine-readable stderr record.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => core_code(e),
            CliError::Parse { .. } => "PARSE_ERROR",
            CliError::DuplicateId { .. } => "DUPLICATE_ID",
            CliError::MissingId { .. } => "MISSING_ID",
            CliError::NonNumericValue { .. } => "NON_NUMERIC_VALUE",
            CliError::Io { .. } => "IO_ERROR",
            CliError::Config(_) => "CONFIG_ERROR",
            CliError::UnsupportedFormat { .. } => "UNSUPPORTED_FORMAT",
        }
    }

    /// The single-line JSON record written to stderr on failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "spec_version": 1,
            "error": { "code": self.code(), "message": self.to_string() },
        })
        .to_string()
    }
}

fn core_code(e: &CoreError) -> &'static str {
    match e {
        CoreError::MissingGeometry { .. } => "MISSING_GEOMETRY",
        CoreError::UnknownVariable { .. } => "UNKNOWN_VARIABLE",
        CoreError::LengthMismatch { .. } => "LENGTH_MISMATCH",
        CoreError::TooFewSites { .. } => "TOO_FEW_SITES",
        CoreError::DegenerateLattice => "DEGENERATE_LATTICE",
        CoreError::InvalidNeighborSpec { .. } => "INVALID_NEIGHBOR_SPEC",
        CoreError::InvalidWeights { .. } => "INVALID_WEIGHTS",
        CoreError::ZeroVariance => "ZERO_VARIANCE",
        CoreError::EmptyWeights => "EMPTY_WEIGHTS",
        CoreError::RankDeficient => "RANK_DEFICIENT",
        CoreError::DegenerateConditioning => "DEGENERATE_CONDITIONING",
        CoreError::InvalidConditioning { .. } => "INVALID_CONDITIONING",
        CoreError::SingularSystem => "SINGULAR_SYSTEM",
        CoreError::RhoOutOfRange { .. } => "RHO_OUT_OF_RANGE",
        CoreError::DuplicateSite { .. } => "DUPLICATE_ID",
        CoreError::DuplicateVariable { .. } => "DUPLICATE_VARIABLE",
        CoreError::UnknownSite { .. } => "UNKNOWN_SITE",
        CoreError::MissingSite { .. } => "MISSING_SITE",
        CoreError::NonFiniteValue { .. } => "NON_NUMERIC_VALUE",
        CoreError::MalformedRing { .. } => "MALFORMED_RING",
        CoreError::InvalidPlan { .. } => "INVALID_PLAN",
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
