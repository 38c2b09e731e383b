//! Global association statistics: univariate, bivariate, partial and
//! semi-partial Moran's I and Geary's C with their null moments.
//!
//! Conventions, applied uniformly:
//! * Moran-type variance scaling divides the sum of squared deviations
//!   by `n`, Geary-type by `n - 1`.
//! * Bivariate denominators are the product of the per-variable
//!   standard-deviation scales times `s0` (Moran) or `2 s0` (Geary);
//!   the cross-product of deviation sums is identically zero for
//!   sample means and is not usable as a denominator.
//! * The univariate statistics evaluate through the bivariate kernel
//!   with both arguments equal, so the diagonal reductions hold
//!   bit-for-bit.
//! * Double sums accumulate one term per site in compressed-row order
//!   and reduce by fixed-order pairwise summation, so results do not
//!   depend on scheduling.

use alloc::string::String;
use alloc::vec::Vec;

use crate::conditioning::{conditional_pair, ConditioningSet};
use crate::error::{Error, Result};
use crate::lattice::AttributeTable;
use crate::numeric::{is_zero_variance, mean, pairwise_sum, sum_sq_dev};
use crate::weights::WeightMatrix;

/// Which statistic family a result belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    MoranI,
    GearyC,
}

impl StatKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatKind::MoranI => "moran",
            StatKind::GearyC => "geary",
        }
    }
}

/// Which variant of the family was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Univariate,
    Bivariate,
    Partial,
    SemiPartial,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Univariate => "uni",
            Variant::Bivariate => "biv",
            Variant::Partial => "partial",
            Variant::SemiPartial => "semipartial",
        }
    }
}

/// A scalar association statistic with its null moments and, when
/// permutation inference has run, a pseudo p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct AssocResult {
    pub statistic: f64,
    pub kind: StatKind,
    pub variant: Variant,
    pub null_mean: Option<f64>,
    pub null_variance: Option<f64>,
    pub pseudo_p: Option<f64>,
    pub replicates: Option<u32>,
    pub n: usize,
    pub s0: f64,
}

fn check_inputs(x: &[f64], w: &WeightMatrix) -> Result<()> {
    if x.len() != w.n() {
        return Err(Error::LengthMismatch { expected: w.n(), got: x.len() });
    }
    if w.n() < 3 {
        return Err(Error::TooFewSites { n: w.n(), required: 3 });
    }
    if w.nnz() == 0 {
        return Err(Error::EmptyWeights);
    }
    Ok(())
}

struct Scale {
    mean: f64,
    ssd: f64,
}

fn scale_of(x: &[f64]) -> Result<Scale> {
    let m = mean(x);
    let ssd = sum_sq_dev(x, m);
    if is_zero_variance(x, ssd) {
        return Err(Error::ZeroVariance);
    }
    Ok(Scale { mean: m, ssd })
}

/// Shared Moran kernel: `sum_ij w_ij (xi_i - mean_i)(xj_j - mean_j)`
/// over `s0 * sigma_i * sigma_j` with sigma^2 = ssd / n.
pub(crate) fn moran_kernel(xi: &[f64], xj: &[f64], w: &WeightMatrix) -> Result<f64> {
    check_inputs(xi, w)?;
    if xj.len() != w.n() {
        return Err(Error::LengthMismatch { expected: w.n(), got: xj.len() });
    }
    let n = w.n() as f64;
    let si = scale_of(xi)?;
    let sj = scale_of(xj)?;
    let mut terms = Vec::with_capacity(w.n());
    for (i, &xiv) in xi.iter().enumerate() {
        let (cols, vals) = w.row(i);
        let mut lag = 0.0;
        for (&j, &wij) in cols.iter().zip(vals) {
            lag += wij * (xj[j] - sj.mean);
        }
        terms.push((xiv - si.mean) * lag);
    }
    let num = pairwise_sum(&terms);
    let sigma_i = libm::sqrt(si.ssd / n);
    let sigma_j = libm::sqrt(sj.ssd / n);
    Ok(num / (w.s0() * sigma_i * sigma_j))
}

/// Shared Geary kernel: `sum_ij w_ij (d_i - d_j)^2` over
/// `2 s0 * sigma_i * sigma_j` with `d` the per-variable deviations from
/// their own means and sigma^2 = ssd / (n - 1).
///
/// Each variable is centered before differencing: in the univariate
/// case the means cancel algebraically, and centering is what makes the
/// bivariate index location-free in either argument and lets the
/// partial statistic with an empty conditioning set coincide with the
/// bivariate one.
pub(crate) fn geary_kernel(xi: &[f64], xj: &[f64], w: &WeightMatrix) -> Result<f64> {
    check_inputs(xi, w)?;
    if xj.len() != w.n() {
        return Err(Error::LengthMismatch { expected: w.n(), got: xj.len() });
    }
    let nm1 = (w.n() - 1) as f64;
    let si = scale_of(xi)?;
    let sj = scale_of(xj)?;
    let mut terms = Vec::with_capacity(w.n());
    for (i, &xiv) in xi.iter().enumerate() {
        let (cols, vals) = w.row(i);
        let di = xiv - si.mean;
        let mut acc = 0.0;
        for (&j, &wij) in cols.iter().zip(vals) {
            let d = di - (xj[j] - sj.mean);
            acc += wij * d * d;
        }
        terms.push(acc);
    }
    let num = pairwise_sum(&terms);
    let sigma_i = libm::sqrt(si.ssd / nm1);
    let sigma_j = libm::sqrt(sj.ssd / nm1);
    Ok(num / (2.0 * w.s0() * sigma_i * sigma_j))
}

/// Univariate Moran's I with its randomization null moments.
pub fn moran_i(x: &[f64], w: &WeightMatrix) -> Result<AssocResult> {
    let statistic = moran_kernel(x, x, w)?;
    let nm = -1.0 / (w.n() as f64 - 1.0);
    let var = moran_null_variance(w)?;
    Ok(AssocResult {
        statistic,
        kind: StatKind::MoranI,
        variant: Variant::Univariate,
        null_mean: Some(nm),
        null_variance: (var >= 0.0).then_some(var),
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}

/// Univariate Geary's C. Values below the null mean of 1 indicate
/// positive autocorrelation; the univariate estimator normally stays
/// within [0, 2].
pub fn geary_c(x: &[f64], w: &WeightMatrix) -> Result<AssocResult> {
    let statistic = geary_kernel(x, x, w)?;
    Ok(AssocResult {
        statistic,
        kind: StatKind::GearyC,
        variant: Variant::Univariate,
        null_mean: Some(1.0),
        null_variance: None,
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}

/// Closed-form null variance of Moran's I, evaluated from the weight
/// entries as
///
/// ```text
/// [n^2 (n-1) S1 - n (n-1) S2 - 2 S0^2] / [(n+1)(n-1)^2 S0^2]
/// ```
///
/// with `S0 = sum w_ij`, `S1 = 1/2 sum (w_ij + w_ji)^2` and
/// `S2 = sum_k (row_k + col_k)^2`. The closed form can come out
/// slightly negative on dense graphs; the value is returned exactly as
/// evaluated.
pub fn moran_null_variance(w: &WeightMatrix) -> Result<f64> {
    let n = w.n();
    if n < 3 {
        return Err(Error::TooFewSites { n, required: 3 });
    }
    if w.nnz() == 0 {
        return Err(Error::EmptyWeights);
    }
    let nf = n as f64;
    let s0 = w.s0();
    let mut s1_terms = Vec::with_capacity(w.nnz());
    for (i, j, wij) in w.entries() {
        let wji = w.get(j, i);
        let pair = wij + wji;
        // the ordered pair (j, i) is visited separately only when w_ji
        // is stored; otherwise account for it here
        let count = if wji > 0.0 { 1.0 } else { 2.0 };
        s1_terms.push(count * pair * pair);
    }
    let s1 = 0.5 * pairwise_sum(&s1_terms);
    let mut row_sums = alloc::vec![0.0f64; n];
    let mut col_sums = alloc::vec![0.0f64; n];
    for (i, j, wij) in w.entries() {
        row_sums[i] += wij;
        col_sums[j] += wij;
    }
    let s2_terms: Vec<f64> = (0..n)
        .map(|k| {
            let t = row_sums[k] + col_sums[k];
            t * t
        })
        .collect();
    let s2 = pairwise_sum(&s2_terms);
    let num = nf * nf * (nf - 1.0) * s1 - nf * (nf - 1.0) * s2 - 2.0 * s0 * s0;
    let den = (nf + 1.0) * (nf - 1.0) * (nf - 1.0) * s0 * s0;
    Ok(num / den)
}

/// Bivariate Moran cross-correlation index. Not symmetric in its
/// arguments in general; reduces to [`moran_i`] when `xi == xj`.
pub fn moran_i_biv(xi: &[f64], xj: &[f64], w: &WeightMatrix) -> Result<AssocResult> {
    let statistic = moran_kernel(xi, xj, w)?;
    Ok(AssocResult {
        statistic,
        kind: StatKind::MoranI,
        variant: Variant::Bivariate,
        null_mean: None,
        null_variance: None,
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}

/// Bivariate Geary contiguity ratio. Not symmetric in its arguments in
/// general; reduces to [`geary_c`] when `xi == xj`. Bivariate values
/// may leave the univariate [0, 2] interval.
pub fn geary_c_biv(xi: &[f64], xj: &[f64], w: &WeightMatrix) -> Result<AssocResult> {
    let statistic = geary_kernel(xi, xj, w)?;
    Ok(AssocResult {
        statistic,
        kind: StatKind::GearyC,
        variant: Variant::Bivariate,
        null_mean: None,
        null_variance: None,
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}

/// Guard threshold shared by the recursion denominators.
const CONDITIONING_GUARD: f64 = 1e-12;

/// Three-component recursion shared by the partial Moran and Geary
/// statistics: `(a_ij - a_ik a_jk) / (sqrt(1 - a_ik^2) sqrt(1 - a_jk^2))`.
pub fn partial_from_bivariate(a_ij: f64, a_ik: f64, a_jk: f64) -> Result<f64> {
    let d_ik = 1.0 - a_ik * a_ik;
    let d_jk = 1.0 - a_jk * a_jk;
    if d_ik < CONDITIONING_GUARD || d_jk < CONDITIONING_GUARD {
        return Err(Error::DegenerateConditioning);
    }
    Ok((a_ij - a_ik * a_jk) / (libm::sqrt(d_ik) * libm::sqrt(d_jk)))
}

/// Semi-partial recursion `(a_ij - a_ik a_kj) / sqrt(1 - a_kj^2)`,
/// conditioning removed from the `j` side only. The single `a_kj`
/// argument serves both the numerator product and the denominator
/// guard; for a symmetric association the two coincide.
pub fn semipartial_from_bivariate(a_ij: f64, a_ik: f64, a_kj: f64) -> Result<f64> {
    let d = 1.0 - a_kj * a_kj;
    if d < CONDITIONING_GUARD {
        return Err(Error::DegenerateConditioning);
    }
    Ok((a_ij - a_ik * a_kj) / libm::sqrt(d))
}

fn conditional_fields(
    table: &AttributeTable,
    i: &str,
    j: &str,
    given: &[String],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (fi, fj) = conditional_pair(table, i, j, given)?;
    Ok((fi.values, fj.values))
}

/// Partial Moran's I: the bivariate index applied to the conditional
/// components of `i` and `j` given `c`. Not symmetric in `(i, j)`.
pub fn moran_i_partial(
    table: &AttributeTable,
    i: &str,
    j: &str,
    given: &[String],
    w: &WeightMatrix,
) -> Result<AssocResult> {
    let (fi, fj) = conditional_fields(table, i, j, given)?;
    let statistic = moran_kernel(&fi, &fj, w)?;
    Ok(AssocResult {
        statistic,
        kind: StatKind::MoranI,
        variant: Variant::Partial,
        null_mean: None,
        null_variance: None,
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}

/// Partial Geary's C on the conditional components, as
/// [`moran_i_partial`].
pub fn geary_c_partial(
    table: &AttributeTable,
    i: &str,
    j: &str,
    given: &[String],
    w: &WeightMatrix,
) -> Result<AssocResult> {
    let (fi, fj) = conditional_fields(table, i, j, given)?;
    let statistic = geary_kernel(&fi, &fj, w)?;
    Ok(AssocResult {
        statistic,
        kind: StatKind::GearyC,
        variant: Variant::Partial,
        null_mean: None,
        null_variance: None,
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}

/// Semi-partial statistic for one conditioning variable, assembled
/// from the bivariate measures through [`semipartial_from_bivariate`].
pub fn semipartial(
    kind: StatKind,
    table: &AttributeTable,
    i: &str,
    j: &str,
    k: &str,
    w: &WeightMatrix,
) -> Result<AssocResult> {
    let set = ConditioningSet::new(table, i, j, &[String::from(k)])?;
    let xi = table.variable(set.target_i())?;
    let xj = table.variable(set.target_j())?;
    let xk = table.variable(k)?;
    let kernel = match kind {
        StatKind::MoranI => moran_kernel,
        StatKind::GearyC => geary_kernel,
    };
    let a_ij = kernel(xi, xj, w)?;
    let a_ik = kernel(xi, xk, w)?;
    let a_kj = kernel(xk, xj, w)?;
    let statistic = semipartial_from_bivariate(a_ij, a_ik, a_kj)?;
    Ok(AssocResult {
        statistic,
        kind,
        variant: Variant::SemiPartial,
        null_mean: None,
        null_variance: None,
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}

/// Partial statistic for exactly one conditioning variable computed by
/// the three-component recursion instead of residualization. The two
/// constructions are related but not numerically identical.
pub fn partial_by_recursion(
    kind: StatKind,
    table: &AttributeTable,
    i: &str,
    j: &str,
    k: &str,
    w: &WeightMatrix,
) -> Result<AssocResult> {
    let set = ConditioningSet::new(table, i, j, &[String::from(k)])?;
    let xi = table.variable(set.target_i())?;
    let xj = table.variable(set.target_j())?;
    let xk = table.variable(k)?;
    let kernel = match kind {
        StatKind::MoranI => moran_kernel,
        StatKind::GearyC => geary_kernel,
    };
    let a_ij = kernel(xi, xj, w)?;
    let a_ik = kernel(xi, xk, w)?;
    let a_jk = kernel(xj, xk, w)?;
    let statistic = partial_from_bivariate(a_ij, a_ik, a_jk)?;
    Ok(AssocResult {
        statistic,
        kind,
        variant: Variant::Partial,
        null_mean: None,
        null_variance: None,
        pseudo_p: None,
        replicates: None,
        n: w.n(),
        s0: w.s0(),
    })
}
