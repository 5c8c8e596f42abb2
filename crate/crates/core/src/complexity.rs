//! Revealed comparative advantage and the economic / product complexity
//! indices computed from it.
//!
//! Both routes (method of reflections and the second eigenvector of the
//! cluster-cluster operator `W = D_c^-1 M D_p^-1 M^T`) report standardized raw
//! scores and their `[0, 1]` min-max rescaling.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cluster::{AmenityCluster, Shop};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    pub clusters: Vec<usize>,
    pub products: Vec<String>,
    /// Row-major `clusters x products`.
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneReport {
    pub dropped_clusters: Vec<usize>,
    pub dropped_products: Vec<String>,
}

impl PruneReport {
    pub fn is_empty(&self) -> bool {
        self.dropped_clusters.is_empty() && self.dropped_products.is_empty()
    }
}

impl CountMatrix {
    /// Builds a matrix and removes all-zero rows and columns.
    pub fn new(
        clusters: Vec<usize>,
        products: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<(CountMatrix, PruneReport)> {
        if counts.len() != clusters.len() {
            return Err(Error::LengthMismatch(clusters.len(), counts.len()));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != products.len()) {
            return Err(Error::LengthMismatch(products.len(), row.len()));
        }
        let keep_rows: Vec<usize> = (0..clusters.len())
            .filter(|&r| counts[r].iter().any(|&v| v > 0))
            .collect();
        let keep_cols: Vec<usize> = (0..products.len())
            .filter(|&c| counts.iter().any(|row| row[c] > 0))
            .collect();
        let report = PruneReport {
            dropped_clusters: (0..clusters.len())
                .filter(|r| !keep_rows.contains(r))
                .map(|r| clusters[r])
                .collect(),
            dropped_products: (0..products.len())
                .filter(|c| !keep_cols.contains(c))
                .map(|c| products[c].clone())
                .collect(),
        };
        if !report.is_empty() {
            log::warn!(
                "pruned {} empty clusters and {} empty products",
                report.dropped_clusters.len(),
                report.dropped_products.len()
            );
        }
        let matrix = CountMatrix {
            clusters: keep_rows.iter().map(|&r| clusters[r]).collect(),
            products: keep_cols.iter().map(|&c| products[c].clone()).collect(),
            counts: keep_rows
                .iter()
                .map(|&r| keep_cols.iter().map(|&c| counts[r][c]).collect())
                .collect(),
        };
        Ok((matrix, report))
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }
}

/// Counts member shops per (cluster, product). Shops outside every cluster
/// are ignored; products are ordered by code.
pub fn build_counts(shops: &[Shop], clusters: &[AmenityCluster]) -> Result<(CountMatrix, PruneReport)> {
    let by_id: HashMap<&str, &Shop> = shops.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut cells: BTreeMap<(usize, &str), u64> = BTreeMap::new();
    let mut products: BTreeSet<&str> = BTreeSet::new();
    for (row, cluster) in clusters.iter().enumerate() {
        for id in &cluster.member_ids {
            if let Some(shop) = by_id.get(id.as_str()) {
                *cells.entry((row, shop.product_code.as_str())).or_default() += 1;
                products.insert(shop.product_code.as_str());
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::NoAssignedShops);
    }
    let products: Vec<&str> = products.into_iter().collect();
    let col: HashMap<&str, usize> = products.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut counts = vec![vec![0u64; products.len()]; clusters.len()];
    for ((row, p), n) in cells {
        counts[row][col[p]] = n;
    }
    CountMatrix::new(
        clusters.iter().map(|c| c.cluster_id).collect(),
        products.into_iter().map(String::from).collect(),
        counts,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub clusters: Vec<usize>,
    pub products: Vec<String>,
    pub rca: DMatrix<f64>,
    pub m: DMatrix<u8>,
}

impl IncidenceMatrix {
    /// Wraps a ready-made binary matrix; `rca` mirrors `m`. Labels are
    /// `0..rows` and `p0..p{cols-1}`.
    pub fn from_binary(rows: &[Vec<u8>]) -> Result<IncidenceMatrix> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n == 0 || k == 0 {
            return Err(Error::EmptyMatrix);
        }
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::LengthMismatch(k, r.len()));
        }
        let m = DMatrix::from_fn(n, k, |r, c| u8::from(rows[r][c] != 0));
        Ok(IncidenceMatrix {
            clusters: (0..n).collect(),
            products: (0..k).map(|c| format!("p{c}")).collect(),
            rca: m.map(f64::from),
            m,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_products(&self) -> usize {
        self.m.ncols()
    }

    pub fn diversity(&self) -> Vec<usize> {
        self.m
            .row_iter()
            .map(|r| r.iter().map(|&v| v as usize).sum())
            .collect()
    }

    pub fn ubiquity(&self) -> Vec<usize> {
        self.m
            .column_iter()
            .map(|c| c.iter().map(|&v| v as usize).sum())
            .collect()
    }

    fn row_support(&self) -> Vec<Vec<usize>> {
        (0..self.n_clusters())
            .map(|r| (0..self.n_products()).filter(|&c| self.m[(r, c)] == 1).collect())
            .collect()
    }

    fn col_support(&self) -> Vec<Vec<usize>> {
        (0..self.n_products())
            .map(|c| (0..self.n_clusters()).filter(|&r| self.m[(r, c)] == 1).collect())
            .collect()
    }

    fn check_support(&self) -> Result<()> {
        if self.diversity().contains(&0) {
            return Err(Error::DegenerateIncidence("cluster with no product".into()));
        }
        if self.ubiquity().contains(&0) {
            return Err(Error::DegenerateIncidence("product with no cluster".into()));
        }
        Ok(())
    }
}

/// Balassa index per cell; `m = 1` exactly when `rca >= 1`.
pub fn compute_rca(counts: &CountMatrix) -> Result<IncidenceMatrix> {
    let n = counts.n_clusters();
    let k = counts.n_products();
    let row_tot: Vec<u64> = counts.counts.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<u64> = (0..k).map(|c| counts.counts.iter().map(|r| r[c]).sum()).collect();
    let total: u64 = row_tot.iter().sum();
    if n == 0 || k == 0 || total == 0 {
        return Err(Error::EmptyMatrix);
    }
    if row_tot.contains(&0) || col_tot.contains(&0) {
        return Err(Error::DegenerateIncidence("unpruned zero row or column".into()));
    }
    let rca = DMatrix::from_fn(n, k, |r, c| {
        let x = counts.counts[r][c] as f64;
        (x / row_tot[r] as f64) / (col_tot[c] as f64 / total as f64)
    });
    // Integer cross-multiplication keeps the threshold exact.
    let m = DMatrix::from_fn(n, k, |r, c| {
        let lhs = counts.counts[r][c] as u128 * total as u128;
        let rhs = row_tot[r] as u128 * col_tot[c] as u128;
        u8::from(lhs >= rhs)
    });
    Ok(IncidenceMatrix {
        clusters: counts.clusters.clone(),
        products: counts.products.clone(),
        rca,
        m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityMethod {
    Reflections,
    Eigen,
}

impl std::fmt::Display for ComplexityMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ComplexityMethod::Reflections => "reflections",
            ComplexityMethod::Eigen => "eigen",
        })
    }
}

impl std::str::FromStr for ComplexityMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reflections" => Ok(ComplexityMethod::Reflections),
            "eigen" => Ok(ComplexityMethod::Eigen),
            other => Err(Error::InvalidParameter(format!(
                "unknown complexity method `{other}` (expected reflections or eigen)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityScores {
    pub clusters: Vec<usize>,
    pub products: Vec<String>,
    pub eci_raw: Vec<f64>,
    pub eci: Vec<f64>,
    pub pci_raw: Vec<f64>,
    pub pci: Vec<f64>,
    pub diversity: Vec<usize>,
    pub ubiquity: Vec<usize>,
    pub method: ComplexityMethod,
    pub iterations: usize,
}

pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Mean over each cluster's products (`K_c = 1/M_c sum_p M_cp K_p`).
fn cluster_average(rows: &[Vec<usize>], kp: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|ps| ps.iter().map(|&p| kp[p]).sum::<f64>() / ps.len() as f64)
        .collect()
}

/// Mean over each product's clusters (`K_p = 1/M_p sum_c M_cp K_c`).
fn product_average(cols: &[Vec<usize>], kc: &[f64]) -> Vec<f64> {
    cols.iter()
        .map(|cs| cs.iter().map(|&c| kc[c]).sum::<f64>() / cs.len() as f64)
        .collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Zero mean, unit (population) standard deviation. `None` when constant.
fn standardize(v: &[f64]) -> Option<Vec<f64>> {
    let (mean, sd) = mean_sd(v);
    // Relative threshold: values that only differ by rounding count as constant.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    if !(sd > 1e-12 * scale) {
        return None;
    }
    Some(v.iter().map(|x| (x - mean) / sd).collect())
}

fn min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter()
        .map(|x| {
            if x == &hi {
                1.0
            } else {
                (x - lo) / (hi - lo)
            }
        })
        .collect()
}

/// Ordinal ranks (ties by position).
fn ordinal_ranks(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; v.len()];
    for (r, i) in idx.into_iter().enumerate() {
        ranks[i] = r;
    }
    ranks
}

fn covariance_sign(x: &[f64], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<usize>() as f64 / n;
    x.iter().zip(y).map(|(a, &b)| (a - mx) * (b as f64 - my)).sum()
}

fn finish(
    m: &IncidenceMatrix,
    mut eci_raw: Vec<f64>,
    method: ComplexityMethod,
    iterations: usize,
) -> Result<ComplexityScores> {
    let diversity = m.diversity();
    let ubiquity = m.ubiquity();
    if covariance_sign(&eci_raw, &diversity) < 0.0 {
        eci_raw.iter_mut().for_each(|x| *x = -*x);
    }
    let pci_raw = standardize(&product_average(&m.col_support(), &eci_raw))
        .unwrap_or_else(|| vec![0.0; m.n_products()]);
    let pci = if pci_raw.iter().all(|&x| x == 0.0) {
        vec![0.0; pci_raw.len()]
    } else {
        min_max(&pci_raw)
    };
    Ok(ComplexityScores {
        clusters: m.clusters.clone(),
        products: m.products.clone(),
        eci: min_max(&eci_raw),
        eci_raw,
        pci,
        pci_raw,
        diversity,
        ubiquity,
        method,
        iterations,
    })
}

/// Method of reflections with standardization after every iteration.
///
/// Stops once the ECI ranking is identical across consecutive even
/// iterations and the standardized values moved by less than `tol`.
pub fn method_of_reflections(m: &IncidenceMatrix, max_iter: usize, tol: f64) -> Result<ComplexityScores> {
    m.check_support()?;
    let rows = m.row_support();
    let cols = m.col_support();
    let degenerate = || Error::DegenerateIncidence("all clusters identical".into());

    let div: Vec<f64> = m.diversity().into_iter().map(|d| d as f64).collect();
    let ubi: Vec<f64> = m.ubiquity().into_iter().map(|u| u as f64).collect();
    let mut kc = standardize(&div).ok_or_else(degenerate)?;
    // The odd chain may be constant (equal ubiquities); that is harmless.
    let mut kp = standardize(&ubi).unwrap_or_else(|| vec![0.0; ubi.len()]);

    let mut prev_even = kc.clone();
    let mut iterations = 0;
    for n in 1..=max_iter.max(2) {
        let next_c = cluster_average(&rows, &kp);
        let next_p = product_average(&cols, &kc);
        iterations = n;
        if n % 2 == 0 {
            kc = standardize(&next_c).ok_or_else(degenerate)?;
            kp = standardize(&next_p).unwrap_or_else(|| vec![0.0; next_p.len()]);
            let delta = kc
                .iter()
                .zip(&prev_even)
                .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
            if ordinal_ranks(&kc) == ordinal_ranks(&prev_even) && delta < tol {
                break;
            }
            prev_even = kc.clone();
        } else {
            kc = standardize(&next_c).unwrap_or_else(|| vec![0.0; next_c.len()]);
            kp = standardize(&next_p).unwrap_or_else(|| vec![0.0; next_p.len()]);
        }
    }
    if iterations >= max_iter {
        log::warn!("method of reflections hit max_iter = {max_iter}");
    }
    // Odd iterations can end the loop only via max_iter; report the last even state.
    let eci_raw = if iterations % 2 == 0 { kc } else { prev_even };
    finish(m, eci_raw, ComplexityMethod::Reflections, iterations)
}

const EIGEN_GAP: f64 = 1e-10;

/// ECI from the eigenvector of the second-largest eigenvalue of `W`.
///
/// `W` is similar to the symmetric `S = A A^T` with
/// `A = D_c^-1/2 M D_p^-1/2`, so the eigenproblem is solved on `S` and mapped
/// back with `D_c^-1/2`. When there are fewer products than clusters the
/// smaller `A^T A` is decomposed instead: it shares the nonzero spectrum of
/// `S`, and `A z` recovers the cluster-side eigenvector.
pub fn eigen_complexity(m: &IncidenceMatrix) -> Result<ComplexityScores> {
    m.check_support()?;
    let n = m.n_clusters();
    let k = m.n_products();
    if n < 2 {
        return Err(Error::DegenerateIncidence("fewer than two clusters".into()));
    }
    let div: Vec<f64> = m.diversity().into_iter().map(|d| d as f64).collect();
    let ubi: Vec<f64> = m.ubiquity().into_iter().map(|u| u as f64).collect();
    let mf = m.m.map(f64::from);
    let a = DMatrix::from_fn(n, k, |r, c| mf[(r, c)] / (div[r].sqrt() * ubi[c].sqrt()));
    let product_side = k < n;
    let eig = if product_side {
        SymmetricEigen::new(a.transpose() * &a)
    } else {
        SymmetricEigen::new(&a * a.transpose())
    };

    let dim = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    // The cluster-side spectrum has n - k extra zeros.
    let mut lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    lambda.resize(n, 0.0);
    if (lambda[0] - lambda[1]).abs() < EIGEN_GAP {
        return Err(Error::AmbiguousEigenvector(lambda[0], lambda[1]));
    }
    if n > 2 && (lambda[1] - lambda[2]).abs() < EIGEN_GAP {
        return Err(Error::AmbiguousEigenvector(lambda[1], lambda[2]));
    }
    if dim < 2 {
        return Err(Error::DegenerateIncidence("second eigenvalue is zero".into()));
    }
    let z = eig.eigenvectors.column(order[1]);
    let v: Vec<f64> = if product_side {
        let y = &a * z;
        (0..n).map(|r| y[r] / div[r].sqrt()).collect()
    } else {
        (0..n).map(|r| z[r] / div[r].sqrt()).collect()
    };

    // One more pass through the averaging equations: proportional to v, and
    // clusters with identical rows get bit-identical scores.
    let rows = m.row_support();
    let cols = m.col_support();
    let refined = cluster_average(&rows, &product_average(&cols, &v));
    let eci_raw = standardize(&refined)
        .ok_or_else(|| Error::DegenerateIncidence("all clusters identical".into()))?;
    finish(m, eci_raw, ComplexityMethod::Eigen, 0)
}

pub fn compute_complexity(
    m: &IncidenceMatrix,
    method: ComplexityMethod,
    max_iter: usize,
    tol: f64,
) -> Result<ComplexityScores> {
    match method {
        ComplexityMethod::Reflections => method_of_reflections(m, max_iter, tol),
        ComplexityMethod::Eigen => eigen_complexity(m),
    }
}

/// Inverse ubiquity per product.
pub fn uniqueness(m: &IncidenceMatrix) -> Vec<f64> {
    m.ubiquity()
        .into_iter()
        .map(|u| if u == 0 { 0.0 } else { 1.0 / u as f64 })
        .collect()
}
