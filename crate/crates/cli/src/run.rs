//! Command orchestration: load inputs, dispatch to the core
//! statistics, write artifacts, return the one-line summary.

use std::path::Path;

use rayon::prelude::*;

use spassoc_core::conditioning::conditional_pair;
use spassoc_core::global::{
    geary_c, geary_c_biv, geary_c_partial, moran_i, moran_i_biv, moran_i_partial,
    partial_by_recursion, semipartial, AssocResult, StatKind, Variant,
};
use spassoc_core::inference::{
    benjamini_hochberg, classify_quadrants, GlobalPermutation, GlobalStat, LocalPermutation,
    LocalStat, PermutationScheme, QuadrantClass, SignificanceMap,
};
use spassoc_core::lattice::{AttributeTable, Lattice};
use spassoc_core::local::{local_moran, local_moran_biv, local_moran_partial, LocalAssocMap};
use spassoc_core::synthetic::{simulate_common_driver, simulate_sar, CommonDriverSpec, SarSpec};
use spassoc_core::weights::{
    build_weights_with, row_standardize, BuildOptions, Standardization, WeightMatrix,
};

use crate::config::{validate_stat, Command, RunConfig, StatConfig, WeightSource};
use crate::error::{CliError, Result};
use crate::gal_io;
use crate::geojson_io;
use crate::report::GlobalReport;
use crate::table_io;

/// Executes one configuration; returns the summary line for stdout.
/// All outputs are deterministic functions of (inputs, seed, plan).
pub fn run(config: &RunConfig) -> Result<String> {
    match &config.command {
        Command::Weights { out } => run_weights(config, out),
        Command::Global { stat, permutations, out } => {
            run_global(config, stat, *permutations, out.as_deref())
        }
        Command::Local { stat, out } => run_local(config, stat, out),
        Command::SigMap { stat, permutations, alpha, fdr, out, geojson_out } => run_sigmap(
            config,
            stat,
            *permutations,
            *alpha,
            *fdr,
            out.as_deref(),
            geojson_out.as_deref(),
        ),
        Command::Simulate {
            grid,
            rho,
            noise_sd,
            common_driver,
            loading_i,
            loading_j,
            obs_noise_sd,
            out,
            geojson_out,
        } => run_simulate(
            config,
            *grid,
            *rho,
            *noise_sd,
            *common_driver,
            (*loading_i, *loading_j, *obs_noise_sd),
            out,
            geojson_out.as_deref(),
        ),
    }
}

struct Loaded {
    lattice: Lattice,
    document: Option<serde_json::Value>,
    weights: WeightMatrix,
}

fn load(config: &RunConfig) -> Result<Loaded> {
    // the lattice comes from the GeoJSON input when given, otherwise
    // from the adjacency file itself
    let (lattice, document, file_pair) = match (&config.input, &config.weights.source) {
        (Some(path), _) => {
            let geo = geojson_io::read_geojson(path)?;
            (geo.lattice, Some(geo.document), None)
        }
        (None, WeightSource::GalFile(path)) => {
            let (lat, w) = gal_io::read_gal(path)?;
            (lat.clone(), None, Some((lat, w)))
        }
        (None, WeightSource::GwtFile(path)) => {
            let (lat, w) = gal_io::read_gwt(path)?;
            (lat.clone(), None, Some((lat, w)))
        }
        (None, WeightSource::Spec(_)) => {
            return Err(CliError::Config(
                "building weights from a criterion needs --input".into(),
            ))
        }
    };
    let raw = match (&config.weights.source, file_pair) {
        (WeightSource::Spec(spec), _) => {
            let opts = BuildOptions { snap: config.weights.snap, strict: config.weights.strict };
            build_weights_with(&lattice, spec, &opts)?
        }
        (_, Some((file_lat, w))) => align(&file_lat, &w, &lattice)?,
        (WeightSource::GalFile(path), None) => {
            let (file_lat, w) = gal_io::read_gal(path)?;
            align(&file_lat, &w, &lattice)?
        }
        (WeightSource::GwtFile(path), None) => {
            let (file_lat, w) = gal_io::read_gwt(path)?;
            align(&file_lat, &w, &lattice)?
        }
    };
    if config.weights.strict && raw.nnz() == 0 {
        return Err(CliError::Core(spassoc_core::Error::DegenerateLattice));
    }
    let weights = match (config.weights.standardize, raw.standardization()) {
        (Standardization::RowStandardized, _) => row_standardize(&raw),
        (Standardization::Binary, Standardization::Binary) => raw,
        (Standardization::Binary, Standardization::RowStandardized) => {
            return Err(CliError::Config(
                "cannot binarize a weighted matrix; use --standardize row".into(),
            ))
        }
    };
    Ok(Loaded { lattice, document, weights })
}

/// Remaps a matrix read from a file onto the canonical order of the
/// target lattice. Target sites absent from the file become islands;
/// file sites absent from the target are an error.
fn align(from: &Lattice, w: &WeightMatrix, to: &Lattice) -> Result<WeightMatrix> {
    if from.ids() == to.ids() {
        return Ok(w.clone());
    }
    let mut mapping = Vec::with_capacity(from.len());
    for id in from.ids() {
        let idx = to.index_of(id.as_str()).ok_or_else(|| CliError::Core(
            spassoc_core::Error::UnknownSite { id: id.as_str().to_string() },
        ))?;
        mapping.push(idx);
    }
    let triplets: Vec<(usize, usize, f64)> =
        w.entries().map(|(i, j, v)| (mapping[i], mapping[j], v)).collect();
    Ok(WeightMatrix::from_triplets(to.len(), triplets, w.standardization())?)
}

fn load_table(config: &RunConfig, lattice: &Lattice) -> Result<AttributeTable> {
    let path = config
        .attrs
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --attrs <csv>".into()))?;
    table_io::read_attributes(path, lattice)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn run_weights(config: &RunConfig, out: &Path) -> Result<String> {
    let loaded = load(config)?;
    let w = &loaded.weights;
    let islands = w.island_mask().iter().filter(|&&b| b).count();
    let ext = out.extension().and_then(|e| e.to_str()).unwrap_or_default();
    match ext {
        "gal" => {
            let name = out.file_stem().and_then(|s| s.to_str()).unwrap_or("lattice");
            gal_io::write_gal(out, &loaded.lattice, w, name)?;
        }
        "gwt" => gal_io::write_gwt(out, &loaded.lattice, w)?,
        other => {
            return Err(CliError::UnsupportedFormat {
                path: out.to_path_buf(),
                message: format!("unknown weights extension '{other}', use .gal or .gwt"),
            })
        }
    }
    Ok(format!(
        "weights n={} entries={} islands={} -> {}",
        w.n(),
        w.nnz(),
        islands,
        out.display()
    ))
}

fn stat_vars(stat: &StatConfig) -> Vec<String> {
    let mut vars = vec![stat.var_i.clone()];
    if let Some(j) = &stat.var_j {
        vars.push(j.clone());
    }
    vars
}

fn run_global(
    config: &RunConfig,
    stat: &StatConfig,
    permutations: Option<u32>,
    out: Option<&Path>,
) -> Result<String> {
    validate_stat(stat)?;
    let loaded = load(config)?;
    let table = load_table(config, &loaded.lattice)?;
    let w = &loaded.weights;
    let xi = table.variable(&stat.var_i)?;
    let result: AssocResult = match (stat.variant, stat.kind) {
        (Variant::Univariate, StatKind::MoranI) => moran_i(xi, w)?,
        (Variant::Univariate, StatKind::GearyC) => geary_c(xi, w)?,
        (Variant::Bivariate, kind) => {
            let xj = table.variable(stat.var_j.as_deref().unwrap_or_default())?;
            match kind {
                StatKind::MoranI => moran_i_biv(xi, xj, w)?,
                StatKind::GearyC => geary_c_biv(xi, xj, w)?,
            }
        }
        (Variant::Partial, kind) => {
            let j = stat.var_j.as_deref().unwrap_or_default();
            if stat.recursion {
                partial_by_recursion(kind, &table, &stat.var_i, j, &stat.given[0], w)?
            } else {
                match kind {
                    StatKind::MoranI => moran_i_partial(&table, &stat.var_i, j, &stat.given, w)?,
                    StatKind::GearyC => geary_c_partial(&table, &stat.var_i, j, &stat.given, w)?,
                }
            }
        }
        (Variant::SemiPartial, kind) => {
            let j = stat.var_j.as_deref().unwrap_or_default();
            semipartial(kind, &table, &stat.var_i, j, &stat.given[0], w)?
        }
    };
    let result = match permutations {
        None => result,
        Some(m) => {
            if stat.variant == Variant::SemiPartial || stat.recursion {
                return Err(CliError::Config(
                    "permutation inference covers the residualization-based statistics only"
                        .into(),
                ));
            }
            let plan = config.plan(m, PermutationScheme::Total);
            let j = stat.var_j.as_deref().unwrap_or_default();
            let gstat = match (stat.variant, stat.kind) {
                (Variant::Univariate, StatKind::MoranI) => GlobalStat::Moran { x: xi },
                (Variant::Univariate, StatKind::GearyC) => GlobalStat::Geary { x: xi },
                (Variant::Bivariate, StatKind::MoranI) => {
                    GlobalStat::MoranBiv { xi, xj: table.variable(j)? }
                }
                (Variant::Bivariate, StatKind::GearyC) => {
                    GlobalStat::GearyBiv { xi, xj: table.variable(j)? }
                }
                (Variant::Partial, StatKind::MoranI) => GlobalStat::MoranPartial {
                    table: &table,
                    i: &stat.var_i,
                    j,
                    given: &stat.given,
                },
                (Variant::Partial, StatKind::GearyC) => GlobalStat::GearyPartial {
                    table: &table,
                    i: &stat.var_i,
                    j,
                    given: &stat.given,
                },
                (Variant::SemiPartial, _) => unreachable!("rejected above"),
            };
            let engine = GlobalPermutation::new(&gstat, w, &plan)?;
            let m_eff = engine.replicates();
            let stats: std::result::Result<Vec<f64>, spassoc_core::Error> =
                with_pool(config.threads, || {
                    (0..m_eff).into_par_iter().map(|r| engine.replicate(r)).collect()
                })?;
            engine.finish(&stats?)
        }
    };
    if let Some(path) = out {
        let mut report = GlobalReport::new(&result, stat_vars(stat), stat.given.clone());
        if result.pseudo_p.is_some() {
            report.seed = Some(config.seed);
        }
        let value = serde_json::to_value(&report)
            .map_err(|e| CliError::Config(format!("serialize report: {e}")))?;
        geojson_io::write_json(path, &value)?;
    }
    let mut line = format!(
        "{} {} statistic={}",
        result.kind.as_str(),
        result.variant.as_str(),
        result.statistic
    );
    if let Some(p) = result.pseudo_p {
        line.push_str(&format!(" pseudo_p={p}"));
    }
    Ok(line)
}

fn local_csv(lattice: &Lattice, map: &LocalAssocMap) -> String {
    let mut out = String::from("id,value,expected,island\n");
    for (i, id) in lattice.ids().iter().enumerate() {
        if map.island_mask[i] {
            out.push_str(&format!("{},NA,{},true\n", id.as_str(), map.expected[i]));
        } else {
            out.push_str(&format!(
                "{},{},{},false\n",
                id.as_str(),
                map.values[i],
                map.expected[i]
            ));
        }
    }
    out
}

fn run_local(config: &RunConfig, stat: &StatConfig, out: &Path) -> Result<String> {
    validate_stat(stat)?;
    if stat.kind != StatKind::MoranI {
        return Err(CliError::Config("local statistics are Moran-type only".into()));
    }
    if stat.variant == Variant::SemiPartial || stat.recursion {
        return Err(CliError::Config(
            "local maps cover the uni/biv/partial variants".into(),
        ));
    }
    let loaded = load(config)?;
    let table = load_table(config, &loaded.lattice)?;
    let w = &loaded.weights;
    let xi = table.variable(&stat.var_i)?;
    let map = match stat.variant {
        Variant::Univariate => local_moran(xi, w)?,
        Variant::Bivariate => {
            local_moran_biv(xi, table.variable(stat.var_j.as_deref().unwrap_or_default())?, w)?
        }
        Variant::Partial => local_moran_partial(
            &table,
            &stat.var_i,
            stat.var_j.as_deref().unwrap_or_default(),
            &stat.given,
            w,
        )?,
        Variant::SemiPartial => unreachable!("rejected above"),
    };
    std::fs::write(out, local_csv(&loaded.lattice, &map)).map_err(|e| CliError::io(out, e))?;
    let islands = map.island_mask.iter().filter(|&&b| b).count();
    Ok(format!(
        "local moran {} n={} islands={} -> {}",
        stat.variant.as_str(),
        map.len(),
        islands,
        out.display()
    ))
}

fn sigmap_csv(lattice: &Lattice, map: &SignificanceMap) -> String {
    let mut out = String::from("id,value,z_value,z_lag,pseudo_p,class\n");
    for (id, site) in lattice.ids().iter().zip(&map.sites) {
        if site.class == QuadrantClass::Island {
            out.push_str(&format!(
                "{},NA,{},NA,NA,island\n",
                id.as_str(),
                site.z_value
            ));
        } else {
            let p = site.pseudo_p.map(|p| p.to_string()).unwrap_or_else(|| "NA".into());
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                id.as_str(),
                site.value,
                site.z_value,
                site.z_lag,
                p,
                site.class.as_str()
            ));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_sigmap(
    config: &RunConfig,
    stat: &StatConfig,
    permutations: u32,
    alpha: f64,
    fdr: bool,
    out: Option<&Path>,
    geojson_out: Option<&Path>,
) -> Result<String> {
    validate_stat(stat)?;
    if stat.kind != StatKind::MoranI {
        return Err(CliError::Config("significance maps are Moran-type only".into()));
    }
    if stat.variant == Variant::SemiPartial || stat.recursion {
        return Err(CliError::Config(
            "significance maps cover the uni/biv/partial variants".into(),
        ));
    }
    if out.is_none() && geojson_out.is_none() {
        return Err(CliError::Config("sigmap needs --out and/or --geojson-out".into()));
    }
    let loaded = load(config)?;
    let table = load_table(config, &loaded.lattice)?;
    let w = &loaded.weights;
    let plan = config.plan(permutations, PermutationScheme::ConditionalOnSite);
    let xi = table.variable(&stat.var_i)?.to_vec();
    let j = stat.var_j.as_deref().unwrap_or_default();
    // the quadrant axes: the variable pair itself, or the conditional
    // fields for the partial map
    let (axis_i, axis_j, lstat): (Vec<f64>, Vec<f64>, LocalStat<'_>) = match stat.variant {
        Variant::Univariate => {
            (xi.clone(), xi.clone(), LocalStat::Moran { x: table.variable(&stat.var_i)? })
        }
        Variant::Bivariate => {
            let xj = table.variable(j)?.to_vec();
            (
                xi.clone(),
                xj,
                LocalStat::MoranBiv {
                    xi: table.variable(&stat.var_i)?,
                    xj: table.variable(j)?,
                },
            )
        }
        Variant::Partial => {
            let (fi, fj) = conditional_pair(&table, &stat.var_i, j, &stat.given)?;
            (
                fi.values,
                fj.values,
                LocalStat::MoranPartial {
                    table: &table,
                    i: &stat.var_i,
                    j,
                    given: &stat.given,
                },
            )
        }
        Variant::SemiPartial => unreachable!("rejected above"),
    };
    let engine = LocalPermutation::new(&lstat, w, &plan)?;
    let n = w.n();
    let pseudo_p: Vec<Option<f64>> = with_pool(config.threads, || {
        (0..n).into_par_iter().map(|i| engine.site_pseudo_p(i)).collect()
    })?;
    let pseudo_p = if fdr { benjamini_hochberg(&pseudo_p) } else { pseudo_p };
    let map = classify_quadrants(&axis_i, &axis_j, w, &pseudo_p, alpha)?;
    if let Some(path) = out {
        std::fs::write(path, sigmap_csv(&loaded.lattice, &map))
            .map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = geojson_out {
        let document = loaded.document.as_ref().ok_or_else(|| {
            CliError::Config("--geojson-out needs a GeoJSON --input to enrich".into())
        })?;
        let enriched = geojson_io::enrich_geojson(document, &map)?;
        geojson_io::write_json(path, &enriched)?;
    }
    let significant = map
        .sites
        .iter()
        .filter(|s| {
            !matches!(s.class, QuadrantClass::NotSignificant | QuadrantClass::Island)
        })
        .count();
    Ok(format!(
        "sigmap moran {} alpha={} replicates={} significant={}/{}",
        stat.variant.as_str(),
        alpha,
        engine.replicates(),
        significant,
        n
    ))
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    config: &RunConfig,
    grid: Option<(usize, usize)>,
    rho: f64,
    noise_sd: f64,
    common_driver: bool,
    loadings: (f64, f64, f64),
    out: &Path,
    geojson_out: Option<&Path>,
) -> Result<String> {
    let (lattice, w, document) = match (grid, &config.input) {
        (Some((rows, cols)), None) => {
            let doc = geojson_io::grid_geojson(rows, cols);
            let geo = geojson_io::parse_geojson(&doc.to_string())?;
            let opts = BuildOptions { snap: config.weights.snap, strict: config.weights.strict };
            let spec = match &config.weights.source {
                WeightSource::Spec(s) => s.clone(),
                _ => {
                    return Err(CliError::Config(
                        "simulate --grid builds weights from a criterion, not a file".into(),
                    ))
                }
            };
            let raw = build_weights_with(&geo.lattice, &spec, &opts)?;
            let w = match config.weights.standardize {
                Standardization::RowStandardized => row_standardize(&raw),
                Standardization::Binary => raw,
            };
            (geo.lattice, w, Some(doc))
        }
        (None, Some(_)) => {
            let loaded = load(config)?;
            (loaded.lattice, loaded.weights, loaded.document)
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Config("give either --grid or --input, not both".into()))
        }
        (None, None) => {
            return Err(CliError::Config("simulate needs --grid ROWSxCOLS or --input".into()))
        }
    };
    let sar = SarSpec::new(rho, noise_sd, config.seed);
    let (summary, columns): (String, Vec<(&str, Vec<f64>)>) = if common_driver {
        let (li, lj, obs) = loadings;
        let spec = CommonDriverSpec {
            sar,
            loading_i: li,
            loading_j: lj,
            obs_noise_sd: obs,
        };
        let (xi, xj, z) = simulate_common_driver(&w, &spec)?;
        (
            format!(
                "simulate common-driver rho={rho} loadings=({li},{lj}) n={} seed={} -> {}",
                lattice.len(),
                config.seed,
                out.display()
            ),
            vec![("x", xi), ("y", xj), ("z", z)],
        )
    } else {
        let x = simulate_sar(&w, &sar)?;
        (
            format!(
                "simulate sar rho={rho} n={} seed={} -> {}",
                lattice.len(),
                config.seed,
                out.display()
            ),
            vec![("x", x)],
        )
    };
    let column_refs: Vec<(&str, &[f64])> =
        columns.iter().map(|(name, v)| (*name, v.as_slice())).collect();
    table_io::write_attributes(out, &lattice, &column_refs)?;
    if let Some(path) = geojson_out {
        let doc = document.ok_or_else(|| {
            CliError::Config("--geojson-out needs --grid or a GeoJSON --input".into())
        })?;
        geojson_io::write_json(path, &doc)?;
    }
    Ok(summary)
}
