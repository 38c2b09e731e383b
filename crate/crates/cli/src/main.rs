use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spassoc_cli::config::{
    parse_alternative, parse_grid, parse_stat, parse_standardize, parse_weight_source, Command,
    RunConfig, StatConfig, WeightConfig,
};
use spassoc_cli::error::{CliError, Result};
use spassoc_cli::run::run;

/// Spatial association measures for areal lattice data: global, local,
/// bivariate, partial and semi-partial Moran's I and Geary's C with
/// permutation inference and hotspot/coldspot significance maps.
#[derive(Parser)]
#[command(name = "spassoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a spatial weight matrix and write it as .gal or .gwt
    Weights {
        #[command(flatten)]
        input: InputArgs,
        /// Output path (.gal for binary adjacency, .gwt for weights)
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a global association statistic
    Global {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        stat: StatArgs,
        /// Permutation replicates for a pseudo p-value
        #[arg(long)]
        permutations: Option<u32>,
        #[command(flatten)]
        inference: InferenceArgs,
        /// Optional JSON report path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a per-site local Moran map (CSV)
    Local {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        stat: StatArgs,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Local Moran map with conditional permutation inference and
    /// hotspot/coldspot quadrant classes
    Sigmap {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        stat: StatArgs,
        /// Permutation replicates per site
        #[arg(long, default_value_t = 999)]
        permutations: u32,
        #[command(flatten)]
        inference: InferenceArgs,
        /// Significance level for the quadrant classes
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Apply a Benjamini-Hochberg false-discovery-rate adjustment
        #[arg(long)]
        fdr: bool,
        /// Output CSV path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Enriched copy of the input GeoJSON (adds lisa_value, lisa_p,
        /// lisa_class per feature)
        #[arg(long)]
        geojson_out: Option<PathBuf>,
    },
    /// Simulate autoregressive lattice fields as a CSV attribute table
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        /// Unit-square grid ROWSxCOLS instead of --input
        #[arg(long)]
        grid: Option<String>,
        /// Autoregressive coefficient
        #[arg(long, default_value_t = 0.7)]
        rho: f64,
        /// Innovation standard deviation
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        /// Simulation seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit a common-driver triple x,y,z instead of a single field
        #[arg(long)]
        common_driver: bool,
        /// Loading of x on the driver
        #[arg(long, default_value_t = 1.0)]
        loading_i: f64,
        /// Loading of y on the driver
        #[arg(long, default_value_t = 1.0)]
        loading_j: f64,
        /// Observation noise of the common-driver pair
        #[arg(long, default_value_t = 0.3)]
        obs_noise: f64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Grid geometry output (GeoJSON)
        #[arg(long)]
        geojson_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// GeoJSON FeatureCollection of Polygon/MultiPolygon features, each
    /// with an `id` property (Point features act as centroids)
    #[arg(long)]
    input: Option<PathBuf>,
    /// CSV attribute table `id,<var1>,<var2>,...`
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// Inline criterion `queen|rook|knn:k|dist:d|band:d1,d2` or a
    /// .gal/.gwt path. Queen counts any shared boundary point (the
    /// conventional choice for ward-level data); rook requires a
    /// shared edge.
    #[arg(long, default_value = "queen")]
    weights: String,
    /// Weight scaling: `row` or `binary`
    #[arg(long, default_value = "row")]
    standardize: String,
    /// Coordinate snapping grid for boundary matching (0 = exact)
    #[arg(long, default_value_t = 0.0)]
    snap: f64,
    /// Fail on an empty weight matrix
    #[arg(long)]
    strict: bool,
    /// Worker threads for permutation inference (default: run in the
    /// caller's thread); results are identical for every thread count
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StatArgs {
    /// moran|geary, or a combined form like moran-biv, moran-partial,
    /// geary-semipartial
    #[arg(long, default_value = "moran")]
    stat: String,
    /// uni|biv|partial|semipartial (also implied by --stat)
    #[arg(long)]
    variant: Option<String>,
    /// First (focal) variable
    #[arg(long = "i", alias = "var", value_name = "VAR")]
    var_i: Option<String>,
    /// Second variable (bivariate/partial/semi-partial)
    #[arg(long = "j", value_name = "VAR")]
    var_j: Option<String>,
    /// Conditioning variables (comma separated or repeated)
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    /// Single-conditioner partial via the three-component recursion
    /// instead of residualization
    #[arg(long)]
    recursion: bool,
}

#[derive(Args)]
struct InferenceArgs {
    /// Seed of the permutation streams
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// two-sided|greater|less
    #[arg(long, default_value = "two-sided")]
    alternative: String,
}

fn weight_config(input: &InputArgs) -> Result<WeightConfig> {
    Ok(WeightConfig {
        source: parse_weight_source(&input.weights)?,
        standardize: parse_standardize(&input.standardize)?,
        snap: input.snap,
        strict: input.strict,
    })
}

fn stat_config(args: &StatArgs) -> Result<StatConfig> {
    let (kind, variant) = parse_stat(&args.stat, args.variant.as_deref())?;
    let var_i = args
        .var_i
        .clone()
        .ok_or_else(|| CliError::Config("name the focal variable with --i (or --var)".into()))?;
    Ok(StatConfig {
        kind,
        variant,
        var_i,
        var_j: args.var_j.clone(),
        given: args.given.clone(),
        recursion: args.recursion,
    })
}

fn to_run_config(cli: Cli) -> Result<RunConfig> {
    let (input, seed, alternative, command) = match cli.command {
        Cmd::Weights { input, out } => {
            (input, 0, "two-sided".to_string(), Command::Weights { out })
        }
        Cmd::Global { input, stat, permutations, inference, out } => {
            let stat = stat_config(&stat)?;
            (
                input,
                inference.seed,
                inference.alternative,
                Command::Global { stat, permutations, out },
            )
        }
        Cmd::Local { input, stat, out } => {
            let stat = stat_config(&stat)?;
            (input, 0, "two-sided".to_string(), Command::Local { stat, out })
        }
        Cmd::Sigmap { input, stat, permutations, inference, alpha, fdr, out, geojson_out } => {
            let stat = stat_config(&stat)?;
            (
                input,
                inference.seed,
                inference.alternative,
                Command::SigMap { stat, permutations, alpha, fdr, out, geojson_out },
            )
        }
        Cmd::Simulate {
            input,
            grid,
            rho,
            noise_sd,
            seed,
            common_driver,
            loading_i,
            loading_j,
            obs_noise,
            out,
            geojson_out,
        } => {
            let grid = grid.as_deref().map(parse_grid).transpose()?;
            (
                input,
                seed,
                "two-sided".to_string(),
                Command::Simulate {
                    grid,
                    rho,
                    noise_sd,
                    common_driver,
                    loading_i,
                    loading_j,
                    obs_noise_sd: obs_noise,
                    out,
                    geojson_out,
                },
            )
        }
    };
    Ok(RunConfig {
        input: input.input.clone(),
        attrs: input.attrs.clone(),
        weights: weight_config(&input)?,
        seed,
        alternative: parse_alternative(&alternative)?,
        threads: input.threads,
        command,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match to_run_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", e.to_json());
            return ExitCode::FAILURE;
        }
    };
    match run(&config) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
