//! Conditional components for the partial measures: least-squares
//! residualization of a target variable on a set of given variables
//! (plus an intercept), and the conditioning-set bookkeeping.
//!
//! Conditioning is realized as orthogonal projection onto
//! `span{1, given...}`: it is the unique linear construction under
//! which the three-component recursion formulas of the partial
//! statistics hold for Pearson-type quantities.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::AttributeTable;
use crate::numeric::{dot, jacobi_orthogonalize, mean, pairwise_sum, sum_sq_dev};

/// Relative singular-value cutoff below which a design is treated as
/// rank deficient.
const RANK_TOL: f64 = 1e-10;

/// A pair of target variables and the ordered list of conditioning
/// variables. Validated so that the targets differ, neither target
/// appears in the given list, and all names exist in the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditioningSet {
    target_i: String,
    target_j: String,
    given: Vec<String>,
}

impl ConditioningSet {
    pub fn new(
        table: &AttributeTable,
        target_i: &str,
        target_j: &str,
        given: &[String],
    ) -> Result<Self> {
        if target_i == target_j {
            return Err(Error::InvalidConditioning {
                reason: format!("targets must differ, both are '{target_i}'"),
            });
        }
        for name in [target_i, target_j].into_iter().chain(given.iter().map(|s| s.as_str())) {
            if !table.contains(name) {
                return Err(Error::UnknownVariable { name: name.to_string() });
            }
        }
        for g in given {
            if g == target_i || g == target_j {
                return Err(Error::InvalidConditioning {
                    reason: format!("target '{g}' appears in the conditioning list"),
                });
            }
        }
        let mut seen = Vec::new();
        for g in given {
            if seen.contains(g) {
                return Err(Error::InvalidConditioning {
                    reason: format!("duplicate conditioning variable '{g}'"),
                });
            }
            seen.push(g.clone());
        }
        Ok(Self {
            target_i: target_i.to_string(),
            target_j: target_j.to_string(),
            given: given.to_vec(),
        })
    }

    pub fn target_i(&self) -> &str {
        &self.target_i
    }

    pub fn target_j(&self) -> &str {
        &self.target_j
    }

    pub fn given(&self) -> &[String] {
        &self.given
    }
}

/// A residualized variable: the component of the target orthogonal to
/// the conditioning span.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalField {
    pub name: String,
    pub values: Vec<f64>,
    pub mean: f64,
}

/// Precomputed orthonormal basis of `span{1, given...}`, reusable
/// across many residualizations against the same conditioning set.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: Vec<Vec<f64>>,
}

impl Projector {
    /// Builds the projector for `n` observations on the given columns.
    /// Exactly constant given columns are dropped (they duplicate the
    /// intercept); the remaining design must be numerically full rank.
    pub fn new(n: usize, given: &[&[f64]]) -> Result<Self> {
        for col in given {
            if col.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: col.len() });
            }
        }
        let kept: Vec<&[f64]> = given
            .iter()
            .copied()
            .filter(|col| {
                let m = mean(col);
                sum_sq_dev(col, m) > 0.0
            })
            .collect();
        if n <= kept.len() + 1 {
            return Err(Error::InvalidConditioning {
                reason: format!(
                    "{n} observations cannot support {} conditioning variables",
                    kept.len()
                ),
            });
        }
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(kept.len() + 1);
        cols.push(vec![1.0; n]);
        for col in kept {
            cols.push(col.to_vec());
        }
        let sigma = jacobi_orthogonalize(&mut cols);
        let sigma_max = sigma.iter().fold(0.0f64, |m, &s| m.max(s));
        if sigma.iter().any(|&s| s < RANK_TOL * sigma_max) {
            return Err(Error::RankDeficient);
        }
        for (col, &s) in cols.iter_mut().zip(&sigma) {
            for v in col.iter_mut() {
                *v /= s;
            }
        }
        Ok(Self { basis: cols })
    }

    /// Number of variables actually conditioned on (intercept
    /// excluded).
    pub fn rank(&self) -> usize {
        self.basis.len() - 1
    }

    /// The residual of `y` after projection onto the basis.
    pub fn residual(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for b in &self.basis {
            let coef = dot(b, y);
            for (o, bv) in out.iter_mut().zip(b) {
                *o -= coef * bv;
            }
        }
        out
    }
}

/// Both conditional components of a validated conditioning set, with a
/// zero-variance check of each residual against its source scale: a
/// target that is (numerically) an exact linear function of the given
/// variables leaves no conditional signal.
pub fn conditional_pair(
    table: &AttributeTable,
    target_i: &str,
    target_j: &str,
    given: &[String],
) -> Result<(ConditionalField, ConditionalField)> {
    let set = ConditioningSet::new(table, target_i, target_j, given)?;
    let fi = residualize(table, set.target_i(), set.given())?;
    let fj = residualize(table, set.target_j(), set.given())?;
    for (field, source) in [(&fi, set.target_i()), (&fj, set.target_j())] {
        let y = table.variable(source)?;
        let ssd_y = sum_sq_dev(y, mean(y));
        let ssd_r = sum_sq_dev(&field.values, field.mean);
        if ssd_r <= 1e-20 * ssd_y {
            return Err(Error::ZeroVariance);
        }
    }
    Ok((fi, fj))
}

/// Residualizes `target` on the given variables of the table. The
/// result has mean (numerically) zero and is orthogonal to every given
/// column and to the constant vector.
pub fn residualize(
    table: &AttributeTable,
    target: &str,
    given: &[String],
) -> Result<ConditionalField> {
    if given.iter().any(|g| g == target) {
        return Err(Error::InvalidConditioning {
            reason: format!("target '{target}' appears in its own conditioning list"),
        });
    }
    let y = table.variable(target)?;
    let cols: Vec<&[f64]> = given
        .iter()
        .map(|g| table.variable(g))
        .collect::<Result<_>>()?;
    let projector = Projector::new(y.len(), &cols)?;
    let values = projector.residual(y);
    let mean = pairwise_sum(&values) / values.len() as f64;
    let name = if given.is_empty() {
        target.to_string()
    } else {
        format!("{target}|{}", given.join(","))
    };
    Ok(ConditionalField { name, values, mean })
}
