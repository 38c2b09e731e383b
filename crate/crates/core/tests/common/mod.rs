//! Dense O(n^2) oracles and random-instance generators shared by the
//! integration tests. The oracles use naive dense loops and naive
//! accumulation, independent of the sparse production path.
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use spassoc_core::rng::{stream, unit_f64, GaussianStream};
use spassoc_core::weights::{Standardization, WeightMatrix};

pub fn dense_of(w: &WeightMatrix) -> Vec<Vec<f64>> {
    let n = w.n();
    let mut m = vec![vec![0.0; n]; n];
    for (i, j, wij) in w.entries() {
        m[i][j] = wij;
    }
    m
}

fn naive_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn naive_ssd(x: &[f64], mean: f64) -> f64 {
    x.iter().map(|v| (v - mean) * (v - mean)).sum()
}

pub fn moran_dense(xi: &[f64], xj: &[f64], wd: &[Vec<f64>]) -> f64 {
    let n = xi.len();
    let mi = naive_mean(xi);
    let mj = naive_mean(xj);
    let mut num = 0.0;
    let mut s0 = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += wd[i][j] * (xi[i] - mi) * (xj[j] - mj);
            s0 += wd[i][j];
        }
    }
    let sd_i = (naive_ssd(xi, mi) / n as f64).sqrt();
    let sd_j = (naive_ssd(xj, mj) / n as f64).sqrt();
    num / (s0 * sd_i * sd_j)
}

pub fn geary_dense(xi: &[f64], xj: &[f64], wd: &[Vec<f64>]) -> f64 {
    let n = xi.len();
    let mi = naive_mean(xi);
    let mj = naive_mean(xj);
    let mut num = 0.0;
    let mut s0 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = (xi[i] - mi) - (xj[j] - mj);
            num += wd[i][j] * d * d;
            s0 += wd[i][j];
        }
    }
    let nm1 = (n - 1) as f64;
    num * nm1 / (2.0 * s0 * (naive_ssd(xi, mi) * naive_ssd(xj, mj)).sqrt())
}

pub fn local_moran_dense(xi: &[f64], xj: &[f64], wd: &[Vec<f64>]) -> Vec<f64> {
    let n = xi.len();
    let mi = naive_mean(xi);
    let mj = naive_mean(xj);
    let m2 = naive_ssd(xi, mi) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let lag: f64 = (0..n).map(|j| wd[i][j] * (xj[j] - mj)).sum();
            (xi[i] - mi) / m2 * lag
        })
        .collect()
}

/// The closed-form null variance evaluated straight from the dense
/// matrix with naive triple loops.
pub fn moran_var_dense(wd: &[Vec<f64>]) -> f64 {
    let n = wd.len();
    let nf = n as f64;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s0 += wd[i][j];
                let pair = wd[i][j] + wd[j][i];
                s1 += pair * pair;
            }
        }
    }
    s1 *= 0.5;
    let mut s2 = 0.0;
    for k in 0..n {
        let row: f64 = (0..n).map(|j| wd[k][j]).sum();
        let col: f64 = (0..n).map(|i| wd[i][k]).sum();
        s2 += (row + col) * (row + col);
    }
    (nf * nf * (nf - 1.0) * s1 - nf * (nf - 1.0) * s2 - 2.0 * s0 * s0)
        / ((nf + 1.0) * (nf - 1.0) * (nf - 1.0) * s0 * s0)
}

pub fn random_symmetric_binary(n: usize, p_edge: f64, seed: u64) -> WeightMatrix {
    let mut rng = stream(seed, &[100]);
    let mut trip = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if unit_f64(&mut rng) < p_edge {
                trip.push((i, j, 1.0));
                trip.push((j, i, 1.0));
            }
        }
    }
    if trip.is_empty() {
        trip.push((0, 1, 1.0));
        trip.push((1, 0, 1.0));
    }
    WeightMatrix::from_triplets(n, trip, Standardization::Binary).unwrap()
}

pub fn random_directed_binary(n: usize, p_edge: f64, seed: u64) -> WeightMatrix {
    let mut rng = stream(seed, &[101]);
    let mut trip = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && unit_f64(&mut rng) < p_edge {
                trip.push((i, j, 1.0));
            }
        }
    }
    if trip.is_empty() {
        trip.push((0, 1, 1.0));
    }
    WeightMatrix::from_triplets(n, trip, Standardization::Binary).unwrap()
}

pub fn gaussian_vector(n: usize, seed: u64) -> Vec<f64> {
    GaussianStream::new(stream(seed, &[102])).fill(n, 1.0)
}
