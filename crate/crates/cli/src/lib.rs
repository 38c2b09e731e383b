//! IO, file formats and command orchestration for the spassoc toolkit.
//!
//! The statistical core lives in `spassoc-core`; this crate adds
//! GeoJSON/CSV/GAL/GWT ingestion and emission, the JSON result records
//! and the `spassoc` command line. The [`run::run`] entry point is the
//! library-level equivalent of one CLI invocation.

pub mod config;
pub mod error;
pub mod gal_io;
pub mod geojson_io;
pub mod report;
pub mod run;
pub mod table_io;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use run::run;
