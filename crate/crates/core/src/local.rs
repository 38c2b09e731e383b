//! Local (per-site) Moran statistics: univariate, bivariate and
//! partial.
//!
//! The centered-lag form is used throughout,
//! `I_i = (x_i - mean) / m2 * sum_j w_ij (x_j - mean)` with
//! `m2 = ssd / (n - 1)`: it is the form under which the local values
//! sum to `I * s0 * (n-1)/n` and adding a constant leaves every site
//! unchanged. Sites without neighbours are flagged in the island mask
//! and carry a placeholder value of 0; writers report them as
//! not-available rather than as coldspots.

use alloc::string::String;
use alloc::vec::Vec;

use crate::conditioning::conditional_pair;
use crate::error::{Error, Result};
use crate::lattice::AttributeTable;
use crate::numeric::{is_zero_variance, mean, sum_sq_dev};
use crate::weights::WeightMatrix;

/// Which local statistic a map holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalKind {
    LocalMoran,
    LocalMoranBiv,
    LocalMoranPartial,
}

/// Per-site local statistic values with island flags and the
/// randomization expectation `-sum_j w_ij / (n-1)` per site.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalAssocMap {
    pub kind: LocalKind,
    pub values: Vec<f64>,
    pub island_mask: Vec<bool>,
    pub expected: Vec<f64>,
}

impl LocalAssocMap {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn local_kernel(
    xi: &[f64],
    xj: &[f64],
    w: &WeightMatrix,
    kind: LocalKind,
) -> Result<LocalAssocMap> {
    let n = w.n();
    if xi.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: xi.len() });
    }
    if xj.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: xj.len() });
    }
    if n < 3 {
        return Err(Error::TooFewSites { n, required: 3 });
    }
    let mi = mean(xi);
    let ssd_i = sum_sq_dev(xi, mi);
    if is_zero_variance(xi, ssd_i) {
        return Err(Error::ZeroVariance);
    }
    let mj = mean(xj);
    let ssd_j = sum_sq_dev(xj, mj);
    if is_zero_variance(xj, ssd_j) {
        return Err(Error::ZeroVariance);
    }
    let m2 = ssd_i / (n as f64 - 1.0);
    let nm1 = n as f64 - 1.0;
    let mut values = Vec::with_capacity(n);
    let mut island_mask = Vec::with_capacity(n);
    let mut expected = Vec::with_capacity(n);
    for (i, &xiv) in xi.iter().enumerate() {
        let (cols, vals) = w.row(i);
        if cols.is_empty() {
            values.push(0.0);
            island_mask.push(true);
            expected.push(0.0);
            continue;
        }
        let mut lag = 0.0;
        let mut row_sum = 0.0;
        for (&j, &wij) in cols.iter().zip(vals) {
            lag += wij * (xj[j] - mj);
            row_sum += wij;
        }
        values.push((xiv - mi) / m2 * lag);
        island_mask.push(false);
        expected.push(-row_sum / nm1);
    }
    Ok(LocalAssocMap { kind, values, island_mask, expected })
}

/// Univariate local Moran `I_i`.
pub fn local_moran(x: &[f64], w: &WeightMatrix) -> Result<LocalAssocMap> {
    local_kernel(x, x, w, LocalKind::LocalMoran)
}

/// Bivariate local Moran: the value of `xi` at a site against the lag
/// of `xj` over its neighbours. Reduces to [`local_moran`] when
/// `xi == xj`.
pub fn local_moran_biv(xi: &[f64], xj: &[f64], w: &WeightMatrix) -> Result<LocalAssocMap> {
    local_kernel(xi, xj, w, LocalKind::LocalMoranBiv)
}

/// Partial local Moran: the bivariate local statistic on the
/// conditional components of `i` and `j` given `c`.
pub fn local_moran_partial(
    table: &AttributeTable,
    i: &str,
    j: &str,
    given: &[String],
    w: &WeightMatrix,
) -> Result<LocalAssocMap> {
    let (fi, fj) = conditional_pair(table, i, j, given)?;
    local_kernel(&fi.values, &fj.values, w, LocalKind::LocalMoranPartial)
}
