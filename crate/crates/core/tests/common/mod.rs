//! Helpers and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use urban_centrality::cluster::Shop;
use urban_centrality::geo::{geodesic_distance, GeoPoint};
use urban_centrality::sampling::Sampler;

pub const SEOUL: (f64, f64) = (37.5665, 126.978);

pub fn origin() -> GeoPoint {
    GeoPoint::new(SEOUL.0, SEOUL.1).unwrap()
}

pub fn shop(id: &str, p: GeoPoint, product: &str, industry: &str) -> Shop {
    Shop {
        id: id.to_string(),
        location: p,
        product_code: product.to_string(),
        industry_code: industry.to_string(),
        ward: None,
    }
}

/// Shops scattered uniformly over a `side_km` square around the origin.
pub fn random_shops(n: usize, side_km: f64, seed: u64) -> Vec<Shop> {
    let mut rng = Sampler::new(seed);
    let o = origin();
    (0..n)
        .map(|i| {
            let north = rng.uniform_range(-500.0, 500.0) * side_km;
            let east = rng.uniform_range(-500.0, 500.0) * side_km;
            let p = format!("P{}", rng.below(6));
            shop(&format!("r{i:05}"), o.offset(north, east), &p, "I0")
        })
        .collect()
}

/// The O(N^2) double loop, self term included.
pub fn brute_effective_counts(shops: &[Shop], gamma: f64) -> Vec<f64> {
    shops
        .iter()
        .map(|a| {
            shops
                .iter()
                .map(|b| (-gamma * geodesic_distance(a.location, b.location)).exp())
                .sum()
        })
        .collect()
}

/// A nested matrix: products ranked by complexity, each cluster holds the
/// `d_c` least complex ones. One cluster holds every product.
pub fn nested_matrix(n: usize, k: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = Sampler::new(seed);
    let mut rows: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let d = 1 + rng.below(k as u64) as usize;
            (0..k).map(|p| u8::from(p < d)).collect()
        })
        .collect();
    rows[(rng.below(n as u64)) as usize] = vec![1; k];
    rows
}

/// Random 0/1 matrix with the given fill, with every row and column
/// non-empty.
pub fn random_matrix(n: usize, k: usize, fill: f64, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = Sampler::new(seed);
    let mut rows: Vec<Vec<u8>> = (0..n)
        .map(|_| (0..k).map(|_| u8::from(rng.bernoulli(fill))).collect())
        .collect();
    for (r, row) in rows.iter_mut().enumerate() {
        if row.iter().all(|&v| v == 0) {
            row[r % k] = 1;
        }
    }
    for c in 0..k {
        if rows.iter().all(|row| row[c] == 0) {
            rows[c % n][c] = 1;
        }
    }
    rows
}

/// Second eigenvector of `W = D_c^-1 M D_p^-1 M^T` by deflated power
/// iteration on its symmetric form, mapped back to the cluster side and
/// oriented to correlate positively with diversity.
pub fn power_iteration_eci(rows: &[Vec<u8>], iters: usize) -> Vec<f64> {
    let n = rows.len();
    let k = rows[0].len();
    let d: Vec<f64> = rows.iter().map(|r| r.iter().map(|&v| v as f64).sum()).collect();
    let u: Vec<f64> = (0..k).map(|c| rows.iter().map(|r| r[c] as f64).sum()).collect();
    // S = A A^T with A = D_c^-1/2 M D_p^-1/2.
    let a = |r: usize, c: usize| rows[r][c] as f64 / (d[r] * u[c]).sqrt();
    let s: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..k).map(|c| a(i, c) * a(j, c)).sum()).collect())
        .collect();
    let top: Vec<f64> = {
        let norm = d.iter().sum::<f64>().sqrt();
        d.iter().map(|x| x.sqrt() / norm).collect()
    };
    // Shift by the identity so the iteration favours the largest eigenvalue
    // in value rather than in magnitude (S is positive semidefinite anyway).
    let mut y: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
    for _ in 0..iters {
        let dot: f64 = y.iter().zip(&top).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(&top).for_each(|(a, b)| *a -= dot * b);
        let next: Vec<f64> = (0..n).map(|i| (0..n).map(|j| s[i][j] * y[j]).sum()).collect();
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        y = next.into_iter().map(|x| x / norm).collect();
    }
    let mut v: Vec<f64> = (0..n).map(|i| y[i] / d[i].sqrt()).collect();
    let md = d.iter().sum::<f64>() / n as f64;
    let mv = v.iter().sum::<f64>() / n as f64;
    let cov: f64 = v.iter().zip(&d).map(|(a, b)| (a - mv) * (b - md)).sum();
    if cov < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    min_max(&v)
}

pub fn min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().map(|x| (x - lo) / (hi - lo)).collect()
}

/// Solves `(X^T X) b = X^T y` by Gaussian elimination with partial pivoting.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| x.iter().map(|r| r[i] * r[j]).sum()).collect();
            row.push(x.iter().zip(y).map(|(r, yv)| r[i] * yv).sum());
            row
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

pub fn r_squared(x: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(r, yv)| {
            let fit: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
            (yv - fit).powi(2)
        })
        .sum();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    1.0 - ssr / sst
}
