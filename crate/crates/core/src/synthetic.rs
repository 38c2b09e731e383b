//! Simulation of lattice fields with known spatial structure:
//! simultaneous-autoregressive (SAR) Gaussian fields and common-driver
//! variable triples, used as validation oracles for the association
//! measures.
//!
//! Gaussian variates come from the crate's pinned Marsaglia-polar
//! stream (see [`crate::rng`]), so fields are byte-identical for a
//! given seed across platforms and releases.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::{lu_solve, norm2};
use crate::rng::{stream, GaussianStream};
use crate::weights::{spatial_lag, Standardization, WeightMatrix};

/// Above this site count the solver switches from a dense LU
/// factorization to fixed-point iteration.
const DENSE_LIMIT: usize = 2500;

/// Relative residual tolerance of the iterative solver.
const ITER_TOL: f64 = 1e-10;

/// Stream roles within one seed.
const TAG_SAR_NOISE: u64 = 0;
const TAG_OBS_NOISE_I: u64 = 1;
const TAG_OBS_NOISE_J: u64 = 2;

/// Parameters of a SAR field `x = (I - rho W)^-1 eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarSpec {
    pub rho: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SarSpec {
    pub fn new(rho: f64, noise_sd: f64, seed: u64) -> Self {
        Self { rho, noise_sd, seed }
    }
}

/// Parameters of a common-driver triple: a latent SAR field `z` and two
/// observed variables `xi = loading_i * z + noise`,
/// `xj = loading_j * z + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommonDriverSpec {
    pub sar: SarSpec,
    pub loading_i: f64,
    pub loading_j: f64,
    /// Standard deviation of the observation noise added to each
    /// observed variable.
    pub obs_noise_sd: f64,
}

fn check_sar(w: &WeightMatrix, spec: &SarSpec) -> Result<()> {
    if w.standardization() != Standardization::RowStandardized {
        return Err(Error::InvalidWeights {
            reason: alloc::string::String::from("SAR simulation requires a row-standardized matrix"),
        });
    }
    if !(spec.noise_sd > 0.0) {
        return Err(Error::InvalidPlan {
            reason: alloc::string::String::from("noise standard deviation must be positive"),
        });
    }
    // The infinity norm bounds the spectral radius for a nonnegative
    // matrix; rows of a row-standardized matrix sum to 1 (or 0), so
    // |rho| < 1 guarantees an invertible system.
    let max_row_sum = (0..w.n()).map(|i| w.row_sum(i)).fold(0.0f64, f64::max);
    let bound = if max_row_sum > 0.0 { 1.0 / max_row_sum } else { f64::INFINITY };
    if !(spec.rho.abs() < bound) {
        return Err(Error::RhoOutOfRange { rho: spec.rho, bound });
    }
    Ok(())
}

/// Draws one SAR field `x = (I - rho W)^-1 eps` with
/// `eps ~ N(0, noise_sd^2)` i.i.d., deterministic in the seed.
pub fn simulate_sar(w: &WeightMatrix, spec: &SarSpec) -> Result<Vec<f64>> {
    check_sar(w, spec)?;
    let n = w.n();
    let mut gauss = GaussianStream::new(stream(spec.seed, &[TAG_SAR_NOISE]));
    let eps = gauss.fill(n, spec.noise_sd);
    solve_sar(w, spec.rho, &eps)
}

/// Solves `(I - rho W) x = eps`.
fn solve_sar(w: &WeightMatrix, rho: f64, eps: &[f64]) -> Result<Vec<f64>> {
    let n = w.n();
    if rho == 0.0 {
        return Ok(eps.to_vec());
    }
    if n <= DENSE_LIMIT {
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        for (i, j, wij) in w.entries() {
            a[i * n + j] -= rho * wij;
        }
        lu_solve(a, eps.to_vec())
    } else {
        // fixed-point iteration x <- eps + rho W x; the stability guard
        // makes this a contraction
        let mut x = eps.to_vec();
        let eps_norm = norm2(eps).max(f64::MIN_POSITIVE);
        for _ in 0..100_000 {
            let lag = spatial_lag(w, &x)?;
            let mut next = Vec::with_capacity(n);
            for (e, l) in eps.iter().zip(&lag) {
                next.push(e + rho * l);
            }
            x = next;
            let lag2 = spatial_lag(w, &x)?;
            let residual: Vec<f64> = eps
                .iter()
                .zip(x.iter().zip(&lag2))
                .map(|(e, (xv, lv))| e - (xv - rho * lv))
                .collect();
            if norm2(&residual) <= ITER_TOL * eps_norm {
                return Ok(x);
            }
        }
        Err(Error::SingularSystem)
    }
}

/// Draws a common-driver triple `(xi, xj, z)`: `z` a SAR field and the
/// two observed variables loaded on it with independent observation
/// noise. The `z` field equals `simulate_sar` under the same seed.
pub fn simulate_common_driver(
    w: &WeightMatrix,
    spec: &CommonDriverSpec,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if !(spec.obs_noise_sd >= 0.0) {
        return Err(Error::InvalidPlan {
            reason: alloc::string::String::from("observation noise must be nonnegative"),
        });
    }
    let z = simulate_sar(w, &spec.sar)?;
    let n = w.n();
    let mut noise_i = GaussianStream::new(stream(spec.sar.seed, &[TAG_OBS_NOISE_I]));
    let mut noise_j = GaussianStream::new(stream(spec.sar.seed, &[TAG_OBS_NOISE_J]));
    let xi: Vec<f64> = (0..n)
        .map(|k| spec.loading_i * z[k] + spec.obs_noise_sd * noise_i.sample())
        .collect();
    let xj: Vec<f64> = (0..n)
        .map(|k| spec.loading_j * z[k] + spec.obs_noise_sd * noise_j.sample())
        .collect();
    Ok((xi, xj, z))
}
