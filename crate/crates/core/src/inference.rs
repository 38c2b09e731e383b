//! Permutation-based significance for the global and local statistics,
//! and quadrant (hotspot/coldspot) classification.
//!
//! Reproducibility: replicate `r` (and, for local inference, site `i`)
//! draws from an independently derived random stream, so replicates can
//! be evaluated in any order — serially or in parallel — with
//! bit-identical results. Replicates permute a sorted copy of the
//! values, so the replicate stream depends only on the value multiset
//! and the seed, not on the input arrangement.
//!
//! When the permutation space is no larger than the requested number of
//! replicates, the engine enumerates the space exactly once
//! (lexicographic unranking) instead of sampling; pseudo p-values are
//! then exact.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::conditioning::{conditional_pair, Projector};
use crate::error::{Error, Result};
use crate::global::{
    self, geary_c, geary_c_biv, geary_c_partial, moran_i, moran_i_biv, moran_i_partial,
    AssocResult,
};
use crate::lattice::AttributeTable;
use crate::local::{local_moran, local_moran_biv, local_moran_partial, LocalAssocMap};
use crate::numeric::{is_zero_variance, mean, sum_sq_dev};
use crate::rng;
use crate::weights::{row_standardize, spatial_lag, Standardization, WeightMatrix};

/// Stream-domain tags keeping global and local draws disjoint.
const GLOBAL_TAG: u64 = 0x47;
const LOCAL_TAG: u64 = 0x4C;

/// Which units are exchanged under the null.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationScheme {
    /// All site labels are exchangeable (global statistics).
    Total,
    /// The focal site is held fixed and the remaining values are
    /// permuted among the other locations (local statistics).
    ConditionalOnSite,
}

/// Direction of the alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// Extremeness is `|stat - mean(replicates)|`.
    TwoSided,
    Greater,
    Less,
}

/// Replicate count, seed, scheme and alternative for one permutation
/// run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationPlan {
    pub replicates: u32,
    pub seed: u64,
    pub scheme: PermutationScheme,
    pub alternative: Alternative,
}

impl Default for PermutationPlan {
    fn default() -> Self {
        Self {
            replicates: 999,
            seed: 0,
            scheme: PermutationScheme::Total,
            alternative: Alternative::TwoSided,
        }
    }
}

impl PermutationPlan {
    /// Validates the plan (at least 19 replicates, the minimum giving
    /// alpha = 0.05 resolution).
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 19 {
            return Err(Error::InvalidPlan {
                reason: "at least 19 replicates are required".to_string(),
            });
        }
        Ok(())
    }
}

/// A global statistic together with its inputs, ready for permutation.
#[derive(Debug, Clone)]
pub enum GlobalStat<'a> {
    Moran { x: &'a [f64] },
    Geary { x: &'a [f64] },
    MoranBiv { xi: &'a [f64], xj: &'a [f64] },
    GearyBiv { xi: &'a [f64], xj: &'a [f64] },
    MoranPartial { table: &'a AttributeTable, i: &'a str, j: &'a str, given: &'a [String] },
    GearyPartial { table: &'a AttributeTable, i: &'a str, j: &'a str, given: &'a [String] },
}

enum GlobalEval {
    MoranUni,
    GearyUni,
    MoranBiv { xi: Vec<f64> },
    GearyBiv { xi: Vec<f64> },
    MoranPartial { resid_i: Vec<f64>, projector: Projector },
    GearyPartial { resid_i: Vec<f64>, projector: Projector },
}

/// Prepared permutation run for a global statistic. Bivariate and
/// partial statistics hold the first variable's spatial arrangement
/// fixed and permute the second variable's values across sites; for the
/// partial variants the permuted values are re-residualized with the
/// precomputed conditioning basis. `replicate` is a pure function of
/// the replicate index, safe to call concurrently.
pub struct GlobalPermutation<'a> {
    w: &'a WeightMatrix,
    plan: PermutationPlan,
    observed: AssocResult,
    base_sorted: Vec<f64>,
    eval: GlobalEval,
    effective: u32,
    exhaustive: bool,
}

fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

impl<'a> GlobalPermutation<'a> {
    pub fn new(stat: &GlobalStat<'a>, w: &'a WeightMatrix, plan: &PermutationPlan) -> Result<Self> {
        plan.validate()?;
        if plan.scheme != PermutationScheme::Total {
            return Err(Error::InvalidPlan {
                reason: "global statistics use the total permutation scheme".to_string(),
            });
        }
        let (observed, base, eval) = match stat {
            GlobalStat::Moran { x } => (moran_i(x, w)?, x.to_vec(), GlobalEval::MoranUni),
            GlobalStat::Geary { x } => (geary_c(x, w)?, x.to_vec(), GlobalEval::GearyUni),
            GlobalStat::MoranBiv { xi, xj } => (
                moran_i_biv(xi, xj, w)?,
                xj.to_vec(),
                GlobalEval::MoranBiv { xi: xi.to_vec() },
            ),
            GlobalStat::GearyBiv { xi, xj } => (
                geary_c_biv(xi, xj, w)?,
                xj.to_vec(),
                GlobalEval::GearyBiv { xi: xi.to_vec() },
            ),
            GlobalStat::MoranPartial { table, i, j, given } => {
                let observed = moran_i_partial(table, i, j, given, w)?;
                let (fi, _) = conditional_pair(table, i, j, given)?;
                let cols: Vec<&[f64]> =
                    given.iter().map(|g| table.variable(g)).collect::<Result<_>>()?;
                let projector = Projector::new(w.n(), &cols)?;
                let base = table.variable(j)?.to_vec();
                (observed, base, GlobalEval::MoranPartial { resid_i: fi.values, projector })
            }
            GlobalStat::GearyPartial { table, i, j, given } => {
                let observed = geary_c_partial(table, i, j, given, w)?;
                let (fi, _) = conditional_pair(table, i, j, given)?;
                let cols: Vec<&[f64]> =
                    given.iter().map(|g| table.variable(g)).collect::<Result<_>>()?;
                let projector = Projector::new(w.n(), &cols)?;
                let base = table.variable(j)?.to_vec();
                (observed, base, GlobalEval::GearyPartial { resid_i: fi.values, projector })
            }
        };
        let n = w.n();
        let (effective, exhaustive) = match rng::factorial_capped(n, plan.replicates as u64) {
            Some(space) => (space as u32, true),
            None => (plan.replicates, false),
        };
        Ok(Self {
            w,
            plan: *plan,
            observed,
            base_sorted: sorted_copy(&base),
            eval,
            effective,
            exhaustive,
        })
    }

    /// Effective number of replicates (the full space size when
    /// enumerating exhaustively).
    pub fn replicates(&self) -> u32 {
        self.effective
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn observed(&self) -> &AssocResult {
        &self.observed
    }

    /// The statistic of replicate `r`.
    pub fn replicate(&self, r: u32) -> Result<f64> {
        let n = self.base_sorted.len();
        let permuted: Vec<f64> = if self.exhaustive {
            let perm = rng::unrank_permutation(r as u64, n);
            perm.iter().map(|&k| self.base_sorted[k]).collect()
        } else {
            let mut rng = rng::stream(self.plan.seed, &[GLOBAL_TAG, r as u64]);
            let mut v = self.base_sorted.clone();
            rng::shuffle(&mut rng, &mut v);
            v
        };
        match &self.eval {
            GlobalEval::MoranUni => global::moran_kernel(&permuted, &permuted, self.w),
            GlobalEval::GearyUni => global::geary_kernel(&permuted, &permuted, self.w),
            GlobalEval::MoranBiv { xi } => global::moran_kernel(xi, &permuted, self.w),
            GlobalEval::GearyBiv { xi } => global::geary_kernel(xi, &permuted, self.w),
            GlobalEval::MoranPartial { resid_i, projector } => {
                let resid_j = projector.residual(&permuted);
                global::moran_kernel(resid_i, &resid_j, self.w)
            }
            GlobalEval::GearyPartial { resid_i, projector } => {
                let resid_j = projector.residual(&permuted);
                global::geary_kernel(resid_i, &resid_j, self.w)
            }
        }
    }

    /// Combines the replicate stream into the observed result with its
    /// pseudo p-value `(r + 1) / (M + 1)`.
    pub fn finish(&self, replicate_stats: &[f64]) -> AssocResult {
        let p = pseudo_p(self.observed.statistic, replicate_stats, self.plan.alternative);
        let mut out = self.observed.clone();
        out.pseudo_p = Some(p);
        out.replicates = Some(self.effective);
        out
    }
}

fn pseudo_p(observed: f64, replicates: &[f64], alternative: Alternative) -> f64 {
    let m = replicates.len();
    let count = match alternative {
        Alternative::TwoSided => {
            let center = mean(replicates);
            let obs_dev = (observed - center).abs();
            replicates.iter().filter(|&&v| (v - center).abs() >= obs_dev).count()
        }
        Alternative::Greater => replicates.iter().filter(|&&v| v >= observed).count(),
        Alternative::Less => replicates.iter().filter(|&&v| v <= observed).count(),
    };
    (count + 1) as f64 / (m + 1) as f64
}

/// Runs the full permutation test for a global statistic, serially.
pub fn permute_global(
    stat: &GlobalStat<'_>,
    w: &WeightMatrix,
    plan: &PermutationPlan,
) -> Result<AssocResult> {
    let engine = GlobalPermutation::new(stat, w, plan)?;
    let stats: Vec<f64> =
        (0..engine.replicates()).map(|r| engine.replicate(r)).collect::<Result<_>>()?;
    Ok(engine.finish(&stats))
}

/// The replicate statistic stream of a global permutation run, in
/// replicate order (exposed for diagnostics and tests).
pub fn global_replicates(
    stat: &GlobalStat<'_>,
    w: &WeightMatrix,
    plan: &PermutationPlan,
) -> Result<Vec<f64>> {
    let engine = GlobalPermutation::new(stat, w, plan)?;
    (0..engine.replicates()).map(|r| engine.replicate(r)).collect()
}

/// A local statistic together with its inputs, ready for conditional
/// permutation.
#[derive(Debug, Clone)]
pub enum LocalStat<'a> {
    Moran { x: &'a [f64] },
    MoranBiv { xi: &'a [f64], xj: &'a [f64] },
    MoranPartial { table: &'a AttributeTable, i: &'a str, j: &'a str, given: &'a [String] },
}

/// Prepared conditional-permutation run for a local statistic: for each
/// site the value(s) at the site are held fixed and the remaining
/// values are permuted among the other locations. `site_pseudo_p` is a
/// pure function of the site index, safe to call concurrently.
///
/// For the partial statistic the conditional fields are computed once
/// and their values are permuted: conditional permutation holds the
/// focal site's values fixed, which re-residualizing per replicate
/// would violate.
pub struct LocalPermutation<'a> {
    w: &'a WeightMatrix,
    plan: PermutationPlan,
    map: LocalAssocMap,
    z_factor: Vec<f64>,
    xj_centered: Vec<f64>,
    effective: u32,
    exhaustive: bool,
}

impl<'a> LocalPermutation<'a> {
    pub fn new(stat: &LocalStat<'a>, w: &'a WeightMatrix, plan: &PermutationPlan) -> Result<Self> {
        plan.validate()?;
        if plan.scheme != PermutationScheme::ConditionalOnSite {
            return Err(Error::InvalidPlan {
                reason: "local statistics use the conditional-on-site scheme".to_string(),
            });
        }
        let (map, xi, xj): (LocalAssocMap, Vec<f64>, Vec<f64>) = match stat {
            LocalStat::Moran { x } => (local_moran(x, w)?, x.to_vec(), x.to_vec()),
            LocalStat::MoranBiv { xi, xj } => {
                (local_moran_biv(xi, xj, w)?, xi.to_vec(), xj.to_vec())
            }
            LocalStat::MoranPartial { table, i, j, given } => {
                let map = local_moran_partial(table, i, j, given, w)?;
                let (fi, fj) = conditional_pair(table, i, j, given)?;
                (map, fi.values, fj.values)
            }
        };
        let n = w.n();
        let mi = mean(&xi);
        let m2 = sum_sq_dev(&xi, mi) / (n as f64 - 1.0);
        let z_factor: Vec<f64> = xi.iter().map(|v| (v - mi) / m2).collect();
        let mj = mean(&xj);
        let xj_centered: Vec<f64> = xj.iter().map(|v| v - mj).collect();
        let (effective, exhaustive) = match rng::factorial_capped(n - 1, plan.replicates as u64) {
            Some(space) => (space as u32, true),
            None => (plan.replicates, false),
        };
        Ok(Self { w, plan: *plan, map, z_factor, xj_centered, effective, exhaustive })
    }

    pub fn replicates(&self) -> u32 {
        self.effective
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    /// The observed local map.
    pub fn map(&self) -> &LocalAssocMap {
        &self.map
    }

    /// Conditional pseudo p-value at one site; `None` for islands.
    pub fn site_pseudo_p(&self, site: usize) -> Option<f64> {
        if self.map.island_mask[site] {
            return None;
        }
        let n = self.w.n();
        // pool of centered lag-variable values at the other sites,
        // sorted so the replicate stream depends only on the multiset
        let mut pool: Vec<f64> = self
            .xj_centered
            .iter()
            .enumerate()
            .filter(|&(t, _)| t != site)
            .map(|(_, &v)| v)
            .collect();
        pool.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let (cols, vals) = self.w.row(site);
        let weights: Vec<f64> = vals.to_vec();
        let degree = cols.len();
        let m = self.effective as usize;
        let mut stats = Vec::with_capacity(m);
        if self.exhaustive {
            // neighbour slots in the pool indexing (focal site removed)
            let slots: Vec<usize> =
                cols.iter().map(|&j| if j < site { j } else { j - 1 }).collect();
            for r in 0..m {
                let perm = rng::unrank_permutation(r as u64, n - 1);
                let mut lag = 0.0;
                for (slot, wij) in slots.iter().zip(&weights) {
                    lag += wij * pool[perm[*slot]];
                }
                stats.push(self.z_factor[site] * lag);
            }
        } else {
            let mut idx: Vec<usize> = (0..n - 1).collect();
            let mut swaps: Vec<(usize, usize)> = Vec::with_capacity(degree);
            for r in 0..m {
                let mut rng = rng::stream(self.plan.seed, &[LOCAL_TAG, site as u64, r as u64]);
                rng::partial_shuffle(&mut rng, &mut idx, degree, &mut swaps);
                let mut lag = 0.0;
                for (t, wij) in weights.iter().enumerate() {
                    lag += wij * pool[idx[t]];
                }
                stats.push(self.z_factor[site] * lag);
                rng::undo_swaps(&mut idx, &swaps);
            }
        }
        Some(pseudo_p(self.map.values[site], &stats, self.plan.alternative))
    }
}

/// Result of a local permutation run: the observed map, per-site
/// pseudo p-values (`None` at islands) and the effective replicate
/// count.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalInference {
    pub map: LocalAssocMap,
    pub pseudo_p: Vec<Option<f64>>,
    pub replicates: u32,
}

/// Runs conditional permutation for a local statistic, serially.
pub fn permute_local(
    stat: &LocalStat<'_>,
    w: &WeightMatrix,
    plan: &PermutationPlan,
) -> Result<LocalInference> {
    let engine = LocalPermutation::new(stat, w, plan)?;
    let pseudo_p: Vec<Option<f64>> = (0..w.n()).map(|i| engine.site_pseudo_p(i)).collect();
    Ok(LocalInference { map: engine.map, pseudo_p, replicates: engine.effective })
}

/// Quadrant class of a site in a significance map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrantClass {
    /// High value surrounded by high values (hotspot).
    HighHigh,
    /// High value surrounded by low values.
    HighLow,
    /// Low value surrounded by high values.
    LowHigh,
    /// Low value surrounded by low values (coldspot).
    LowLow,
    NotSignificant,
    Island,
}

impl QuadrantClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuadrantClass::HighHigh => "HH",
            QuadrantClass::HighLow => "HL",
            QuadrantClass::LowHigh => "LH",
            QuadrantClass::LowLow => "LL",
            QuadrantClass::NotSignificant => "ns",
            QuadrantClass::Island => "island",
        }
    }
}

/// One site of a significance map.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSignificance {
    pub value: f64,
    pub z_value: f64,
    pub z_lag: f64,
    pub pseudo_p: Option<f64>,
    pub class: QuadrantClass,
}

/// Per-site local values, pseudo p-values and quadrant classes at a
/// significance level.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceMap {
    pub alpha: f64,
    pub sites: Vec<SiteSignificance>,
}

impl SignificanceMap {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

/// Classifies sites into HH/HL/LH/LL quadrants by the signs of the
/// standardized value of `xi` and the standardized row-standardized
/// spatial lag of `xj`, keeping only sites with `pseudo_p <= alpha`.
/// Pass `xi` again as `xj` for the univariate map.
pub fn classify_quadrants(
    xi: &[f64],
    xj: &[f64],
    w: &WeightMatrix,
    pseudo_p: &[Option<f64>],
    alpha: f64,
) -> Result<SignificanceMap> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidPlan {
            reason: alloc::format!("alpha = {alpha} is outside (0, 1)"),
        });
    }
    if pseudo_p.len() != w.n() {
        return Err(Error::LengthMismatch { expected: w.n(), got: pseudo_p.len() });
    }
    let map = local_moran_biv(xi, xj, w)?;
    let n = w.n();
    // standardized variable over all sites
    let mi = mean(xi);
    let sd_i = libm::sqrt(sum_sq_dev(xi, mi) / (n as f64 - 1.0));
    let z_value: Vec<f64> = xi.iter().map(|v| (v - mi) / sd_i).collect();
    // standardized lag over non-island sites
    let lag = match w.standardization() {
        Standardization::RowStandardized => spatial_lag(w, xj)?,
        Standardization::Binary => spatial_lag(&row_standardize(w), xj)?,
    };
    let inland: Vec<f64> = lag
        .iter()
        .zip(&map.island_mask)
        .filter(|&(_, &island)| !island)
        .map(|(&v, _)| v)
        .collect();
    let ml = mean(&inland);
    let ssd_l = sum_sq_dev(&inland, ml);
    let sd_l = if is_zero_variance(&inland, ssd_l) {
        0.0
    } else {
        libm::sqrt(ssd_l / (inland.len() as f64 - 1.0))
    };
    let mut sites = Vec::with_capacity(n);
    for i in 0..n {
        if map.island_mask[i] {
            sites.push(SiteSignificance {
                value: 0.0,
                z_value: z_value[i],
                z_lag: 0.0,
                pseudo_p: None,
                class: QuadrantClass::Island,
            });
            continue;
        }
        let z_lag = if sd_l > 0.0 { (lag[i] - ml) / sd_l } else { 0.0 };
        let significant = matches!(pseudo_p[i], Some(p) if p <= alpha);
        let class = if !significant {
            QuadrantClass::NotSignificant
        } else if z_value[i] > 0.0 && z_lag > 0.0 {
            QuadrantClass::HighHigh
        } else if z_value[i] > 0.0 && z_lag < 0.0 {
            QuadrantClass::HighLow
        } else if z_value[i] < 0.0 && z_lag > 0.0 {
            QuadrantClass::LowHigh
        } else if z_value[i] < 0.0 && z_lag < 0.0 {
            QuadrantClass::LowLow
        } else {
            QuadrantClass::NotSignificant
        };
        sites.push(SiteSignificance {
            value: map.values[i],
            z_value: z_value[i],
            z_lag,
            pseudo_p: pseudo_p[i],
            class,
        });
    }
    Ok(SignificanceMap { alpha, sites })
}

/// Benjamini-Hochberg step-up adjustment of the non-missing pseudo
/// p-values (optional false-discovery-rate control; off by default in
/// the pipelines).
pub fn benjamini_hochberg(pseudo_p: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut indexed: Vec<(usize, f64)> = pseudo_p
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|v| (i, v)))
        .collect();
    let m = indexed.len();
    indexed.sort_unstable_by(|a, b| a.1.partial_cmp(&b.1).expect("finite p"));
    let mut adjusted = pseudo_p.to_vec();
    let mut running_min = 1.0f64;
    for (rank, &(site, p)) in indexed.iter().enumerate().rev() {
        let candidate = (p * m as f64 / (rank + 1) as f64).min(1.0);
        running_min = running_min.min(candidate);
        adjusted[site] = Some(running_min);
    }
    adjusted
}
