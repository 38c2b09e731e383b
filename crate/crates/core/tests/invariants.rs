//! Cross-path invariants: the sparse production statistics against
//! dense naive oracles on random instances, plus structural properties
//! of weights, conditioning and inference.
#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use spassoc_core::conditioning::residualize;
use spassoc_core::global::{
    geary_c, geary_c_biv, geary_c_partial, moran_i, moran_i_biv, moran_i_partial,
    moran_null_variance, partial_from_bivariate,
};
use spassoc_core::inference::{
    benjamini_hochberg, permute_local, Alternative, LocalStat, PermutationPlan,
    PermutationScheme,
};
use spassoc_core::lattice::{AttributeTable, Lattice, SiteId};
use spassoc_core::local::{local_moran, local_moran_biv};
use spassoc_core::numeric::pairwise_sum;
use spassoc_core::rng::{stream, unit_f64};
use spassoc_core::weights::{
    build_weights, row_standardize, spatial_lag, NeighborSpec, WeightMatrix,
};
use spassoc_core::Point;

fn grid(rows: usize, cols: usize) -> Lattice {
    let mut ids = Vec::new();
    let mut geoms = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            ids.push(SiteId::new(format!("r{r}c{c}")).unwrap());
            let (x, y) = (c as f64, r as f64);
            geoms.push(Some(vec![vec![
                Point::new(x, y),
                Point::new(x + 1.0, y),
                Point::new(x + 1.0, y + 1.0),
                Point::new(x, y + 1.0),
            ]]));
        }
    }
    let n = ids.len();
    Lattice::from_parts(ids, geoms, vec![None; n]).unwrap()
}

#[test]
fn sparse_statistics_match_dense_oracles_on_random_instances() {
    for seed in 0..40u64 {
        let n = 5 + (seed as usize % 46);
        let w = if seed % 2 == 0 {
            random_symmetric_binary(n, 0.2, seed)
        } else {
            random_directed_binary(n, 0.15, seed)
        };
        let w = if seed % 3 == 0 { row_standardize(&w) } else { w };
        let wd = dense_of(&w);
        let xi = gaussian_vector(n, 1000 + seed);
        let xj = gaussian_vector(n, 2000 + seed);

        let m = moran_i(&xi, &w).unwrap().statistic;
        assert!((m - moran_dense(&xi, &xi, &wd)).abs() < 1e-12, "moran seed {seed}");
        let c = geary_c(&xi, &w).unwrap().statistic;
        assert!((c - geary_dense(&xi, &xi, &wd)).abs() < 1e-12, "geary seed {seed}");
        let mb = moran_i_biv(&xi, &xj, &w).unwrap().statistic;
        assert!((mb - moran_dense(&xi, &xj, &wd)).abs() < 1e-12, "moran biv seed {seed}");
        let cb = geary_c_biv(&xi, &xj, &w).unwrap().statistic;
        assert!((cb - geary_dense(&xi, &xj, &wd)).abs() < 1e-12, "geary biv seed {seed}");

        let lm = local_moran_biv(&xi, &xj, &w).unwrap();
        let oracle = local_moran_dense(&xi, &xj, &wd);
        for (site, (a, b)) in lm.values.iter().zip(&oracle).enumerate() {
            if !lm.island_mask[site] {
                assert!((a - b).abs() < 1e-12, "local seed {seed} site {site}");
            }
        }
    }
}

#[test]
fn null_variance_matches_dense_oracle_on_random_matrices() {
    for seed in 0..20u64 {
        let n = 4 + (seed as usize % 30);
        let w = match seed % 3 {
            0 => random_symmetric_binary(n, 0.3, seed),
            1 => random_directed_binary(n, 0.2, seed),
            _ => row_standardize(&random_symmetric_binary(n, 0.3, seed)),
        };
        let a = moran_null_variance(&w).unwrap();
        let b = moran_var_dense(&dense_of(&w));
        assert!((a - b).abs() < 1e-10, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn reduction_identities_on_random_instances() {
    for seed in 0..100u64 {
        let n = 6 + (seed as usize % 20);
        let w = row_standardize(&random_symmetric_binary(n, 0.3, seed));
        let x = gaussian_vector(n, 3000 + seed);
        let y = gaussian_vector(n, 4000 + seed);
        // same code path: exact equality
        assert_eq!(
            moran_i_biv(&x, &x, &w).unwrap().statistic,
            moran_i(&x, &w).unwrap().statistic
        );
        assert_eq!(
            geary_c_biv(&x, &x, &w).unwrap().statistic,
            geary_c(&x, &w).unwrap().statistic
        );
        // empty conditioning reduces to the bivariate index
        let ids: Vec<SiteId> = (0..n).map(|i| SiteId::new(format!("s{i}")).unwrap()).collect();
        let lat = Lattice::from_ids(ids).unwrap();
        let table = AttributeTable::new(
            &lat,
            vec![("x".to_string(), x.clone()), ("y".to_string(), y.clone())],
        )
        .unwrap();
        let mp = moran_i_partial(&table, "x", "y", &[], &w).unwrap().statistic;
        assert!((mp - moran_i_biv(&x, &y, &w).unwrap().statistic).abs() < 1e-12);
        let gp = geary_c_partial(&table, "x", "y", &[], &w).unwrap().statistic;
        assert!((gp - geary_c_biv(&x, &y, &w).unwrap().statistic).abs() < 1e-12);
        // empty conditioning is the identity on the recursion too
        let a = 2.0 * unit_f64(&mut stream(seed, &[7])) - 1.0;
        assert_eq!(partial_from_bivariate(a, 0.0, 0.0).unwrap(), a);
    }
}

#[test]
fn local_sum_identity_on_random_instances() {
    for seed in 0..100u64 {
        let n = 10 + (seed as usize * 7) % 191;
        let w = random_symmetric_binary(n, 0.1, seed);
        let w = if seed % 2 == 0 { row_standardize(&w) } else { w };
        let x = gaussian_vector(n, 5000 + seed);
        let map = local_moran(&x, &w).unwrap();
        let global = moran_i(&x, &w).unwrap();
        let lhs = pairwise_sum(&map.values);
        let rhs = global.statistic * global.s0 * (n as f64 - 1.0) / n as f64;
        assert!((lhs - rhs).abs() < 1e-10, "seed {seed}: {lhs} vs {rhs}");
    }
}

#[test]
fn spatial_lag_is_linear() {
    for seed in 0..20u64 {
        let n = 30;
        let w = row_standardize(&random_symmetric_binary(n, 0.2, seed));
        let x = gaussian_vector(n, 6000 + seed);
        let y = gaussian_vector(n, 7000 + seed);
        let (alpha, beta) = (1.75, -0.4);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
        let lag_combo = spatial_lag(&w, &combo).unwrap();
        let lag_x = spatial_lag(&w, &x).unwrap();
        let lag_y = spatial_lag(&w, &y).unwrap();
        for i in 0..n {
            assert!((lag_combo[i] - (alpha * lag_x[i] + beta * lag_y[i])).abs() < 1e-12);
        }
    }
}

#[test]
fn distance_threshold_equals_band_just_above() {
    // threshold is inclusive, band upper bound is strict: band(0, t+)
    // with t+ the next float above t reproduces threshold(t)
    let lat = grid(1, 6);
    let t: f64 = 2.0;
    let t_plus = f64::from_bits(t.to_bits() + 1);
    let a = build_weights(&lat, &NeighborSpec::DistanceThreshold(t)).unwrap();
    let b = build_weights(&lat, &NeighborSpec::DistanceBand(0.0, t_plus)).unwrap();
    let ea: Vec<_> = a.entries().collect();
    let eb: Vec<_> = b.entries().collect();
    assert_eq!(ea, eb);
}

#[test]
fn contiguity_matrices_are_symmetric_and_hollow() {
    let lat = grid(4, 5);
    for spec in [NeighborSpec::QueenContiguity, NeighborSpec::RookContiguity] {
        let w = build_weights(&lat, &spec).unwrap();
        assert!(w.is_symmetric());
        for (i, j, _) in w.entries() {
            assert_ne!(i, j);
        }
    }
}

#[test]
fn row_standardized_row_sums_are_zero_or_one() {
    for seed in 0..10u64 {
        let w = row_standardize(&random_directed_binary(25, 0.08, seed));
        for i in 0..w.n() {
            let s = w.row_sum(i);
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
        }
    }
}

#[test]
fn residual_orthogonality_on_random_designs() {
    for seed in 0..20u64 {
        let n = 50;
        let g1 = gaussian_vector(n, 8000 + seed);
        let g2 = gaussian_vector(n, 9000 + seed);
        let y = gaussian_vector(n, 10_000 + seed);
        let ids: Vec<SiteId> = (0..n).map(|i| SiteId::new(format!("s{i}")).unwrap()).collect();
        let lat = Lattice::from_ids(ids).unwrap();
        let table = AttributeTable::new(
            &lat,
            vec![
                ("y".to_string(), y),
                ("a".to_string(), g1.clone()),
                ("b".to_string(), g2.clone()),
            ],
        )
        .unwrap();
        let f = residualize(&table, "y", &["a".to_string(), "b".to_string()]).unwrap();
        let rnorm = f.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        for g in [&g1, &g2] {
            let inner: f64 = f.values.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(inner.abs() <= 1e-8 * rnorm * gnorm, "seed {seed}");
        }
        assert!(f.mean.abs() < 1e-10);
    }
}

#[test]
fn pseudo_p_values_stay_in_their_range() {
    let lat = grid(4, 4);
    let w = row_standardize(&build_weights(&lat, &NeighborSpec::QueenContiguity).unwrap());
    let x = gaussian_vector(16, 11_000);
    let plan = PermutationPlan {
        replicates: 39,
        seed: 4,
        scheme: PermutationScheme::ConditionalOnSite,
        alternative: Alternative::TwoSided,
    };
    let out = permute_local(&LocalStat::Moran { x: &x }, &w, &plan).unwrap();
    let m = out.replicates as f64;
    for p in out.pseudo_p.iter().flatten() {
        assert!(*p >= 1.0 / (m + 1.0) && *p <= 1.0);
    }
    // FDR adjustment keeps the range and the missing entries
    let adj = benjamini_hochberg(&out.pseudo_p);
    for (raw, a) in out.pseudo_p.iter().zip(&adj) {
        assert_eq!(raw.is_some(), a.is_some());
        if let Some(v) = a {
            assert!(*v > 0.0 && *v <= 1.0);
        }
    }
}

#[test]
fn knn_union_symmetrization_is_symmetric_superset() {
    use spassoc_core::weights::symmetrize_union;
    let mut centroids = Vec::new();
    let mut rng = stream(3, &[55]);
    for _ in 0..30 {
        centroids.push(Point::new(unit_f64(&mut rng) * 10.0, unit_f64(&mut rng) * 10.0));
    }
    let ids: Vec<SiteId> = (0..30).map(|i| SiteId::new(format!("p{i}")).unwrap()).collect();
    let lat = Lattice::from_parts(
        ids,
        vec![None; 30],
        centroids.into_iter().map(Some).collect(),
    )
    .unwrap();
    let knn = build_weights(&lat, &NeighborSpec::KNearest(3)).unwrap();
    let sym = symmetrize_union(&knn).unwrap();
    assert!(sym.is_symmetric());
    for (i, j, _) in knn.entries() {
        assert_eq!(sym.get(i, j), 1.0);
        assert_eq!(sym.get(j, i), 1.0);
    }
    for i in 0..30 {
        assert_eq!(knn.degree(i), 3);
    }
}

#[test]
fn higher_order_neighbours_are_disjoint_from_lower_orders() {
    use spassoc_core::weights::higher_order;
    let lat = grid(5, 5);
    let base = build_weights(&lat, &NeighborSpec::RookContiguity).unwrap();
    let second = higher_order(&base, 2).unwrap();
    let third = higher_order(&base, 3).unwrap();
    for (i, j, _) in second.entries() {
        assert_eq!(base.get(i, j), 0.0, "order-2 pair ({i},{j}) already first order");
    }
    for (i, j, _) in third.entries() {
        assert_eq!(base.get(i, j), 0.0);
        assert_eq!(second.get(i, j), 0.0);
    }
}

/// Normal-equations least squares (Gaussian elimination on X'X),
/// independent of the production Jacobi projector.
fn residual_by_normal_equations(y: &[f64], given: &[&[f64]]) -> Vec<f64> {
    let n = y.len();
    let p = given.len() + 1;
    // X'X and X'y with X = [1 | given...]
    let col = |k: usize, row: usize| -> f64 {
        if k == 0 {
            1.0
        } else {
            given[k - 1][row]
        }
    };
    let mut xtx = vec![vec![0.0f64; p]; p];
    let mut xty = vec![0.0f64; p];
    for a in 0..p {
        for b in 0..p {
            xtx[a][b] = (0..n).map(|r| col(a, r) * col(b, r)).sum();
        }
        xty[a] = (0..n).map(|r| col(a, r) * y[r]).sum();
    }
    // Gaussian elimination with partial pivoting
    for k in 0..p {
        let pivot_row = (k..p)
            .max_by(|&a, &b| xtx[a][k].abs().partial_cmp(&xtx[b][k].abs()).unwrap())
            .unwrap();
        xtx.swap(k, pivot_row);
        xty.swap(k, pivot_row);
        let pivot = xtx[k][k];
        for r in k + 1..p {
            let f = xtx[r][k] / pivot;
            for c in k..p {
                xtx[r][c] -= f * xtx[k][c];
            }
            xty[r] -= f * xty[k];
        }
    }
    let mut beta = vec![0.0f64; p];
    for k in (0..p).rev() {
        let mut acc = xty[k];
        for c in k + 1..p {
            acc -= xtx[k][c] * beta[c];
        }
        beta[k] = acc / xtx[k][k];
    }
    (0..n)
        .map(|r| y[r] - (0..p).map(|k| beta[k] * col(k, r)).sum::<f64>())
        .collect()
}

/// The partial statistics against a fully composed independent
/// pipeline: normal-equations residualization followed by the dense
/// bivariate oracles, on simulated autoregressive triples.
#[test]
fn partial_statistics_match_dense_pipeline_on_sar_triples() {
    use spassoc_core::local::local_moran_partial;
    use spassoc_core::synthetic::{simulate_common_driver, CommonDriverSpec, SarSpec};

    let lat = grid(10, 10);
    let w = row_standardize(&build_weights(&lat, &NeighborSpec::QueenContiguity).unwrap());
    let wd = dense_of(&w);
    for seed in 0..10u64 {
        let spec = CommonDriverSpec {
            sar: SarSpec::new(0.6, 1.0, 80_000 + seed),
            loading_i: 1.0,
            loading_j: 0.8,
            obs_noise_sd: 0.5,
        };
        let (xi, xj, z) = simulate_common_driver(&w, &spec).unwrap();
        let table = AttributeTable::new(
            &lat,
            vec![
                ("x".to_string(), xi.clone()),
                ("y".to_string(), xj.clone()),
                ("z".to_string(), z.clone()),
            ],
        )
        .unwrap();
        let given = vec!["z".to_string()];

        let ri = residual_by_normal_equations(&xi, &[&z]);
        let rj = residual_by_normal_equations(&xj, &[&z]);

        let produced_i = moran_i_partial(&table, "x", "y", &given, &w).unwrap().statistic;
        let oracle_i = moran_dense(&ri, &rj, &wd);
        assert!((produced_i - oracle_i).abs() < 1e-10, "seed {seed}: moran partial");

        let produced_c = geary_c_partial(&table, "x", "y", &given, &w).unwrap().statistic;
        let oracle_c = geary_dense(&ri, &rj, &wd);
        assert!((produced_c - oracle_c).abs() < 1e-10, "seed {seed}: geary partial");

        let produced_local = local_moran_partial(&table, "x", "y", &given, &w).unwrap();
        let oracle_local = local_moran_dense(&ri, &rj, &wd);
        for (site, (a, b)) in produced_local.values.iter().zip(&oracle_local).enumerate() {
            assert!((a - b).abs() < 1e-10, "seed {seed} site {site}: local partial");
        }
    }
}

/// Statistic under a relabeling of sites equals the statistic of the
/// correspondingly permuted inputs when the matrix is permuted too;
/// cheap sanity that index bookkeeping is consistent.
#[test]
fn relabeling_consistency() {
    let n = 12;
    let w = random_symmetric_binary(n, 0.3, 77);
    let x = gaussian_vector(n, 12_000);
    let perm: Vec<usize> = {
        let mut v: Vec<usize> = (0..n).collect();
        let mut rng = stream(13, &[1]);
        spassoc_core::rng::shuffle(&mut rng, &mut v);
        v
    };
    let xp: Vec<f64> = (0..n).map(|i| x[perm[i]]).collect();
    let mut inv = vec![0usize; n];
    for (new_i, &old_i) in perm.iter().enumerate() {
        inv[old_i] = new_i;
    }
    let wp = WeightMatrix::from_triplets(
        n,
        w.entries().map(|(i, j, v)| (inv[i], inv[j], v)),
        spassoc_core::weights::Standardization::Binary,
    )
    .unwrap();
    let a = moran_i(&x, &w).unwrap().statistic;
    let b = moran_i(&xp, &wp).unwrap().statistic;
    assert!((a - b).abs() < 1e-12);
}
