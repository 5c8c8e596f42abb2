//! Rank tiers and rank-binned contingency densities.

use crate::complexity::IncidenceMatrix;
use crate::error::{Error, Result};

/// Assigns each cluster a tier, `0` being the highest ECI. Clusters are
/// ranked by descending ECI, ties by ascending cluster id; the first
/// `n % n_tiers` tiers get one extra member.
pub fn eci_tiers(eci: &[f64], cluster_ids: &[usize], n_tiers: usize) -> Result<Vec<usize>> {
    if eci.len() != cluster_ids.len() {
        return Err(Error::LengthMismatch(eci.len(), cluster_ids.len()));
    }
    if n_tiers == 0 || eci.len() < n_tiers {
        return Err(Error::TooManyBins {
            n_bins: n_tiers,
            available: eci.len(),
        });
    }
    let mut order: Vec<usize> = (0..eci.len()).collect();
    order.sort_by(|&a, &b| eci[b].total_cmp(&eci[a]).then(cluster_ids[a].cmp(&cluster_ids[b])));
    let sizes = balanced_sizes(eci.len(), n_tiers);
    let mut tiers = vec![0; eci.len()];
    let mut pos = 0;
    for (t, size) in sizes.into_iter().enumerate() {
        for &i in &order[pos..pos + size] {
            tiers[i] = t;
        }
        pos += size;
    }
    Ok(tiers)
}

pub fn tier_label(tier: usize, n_tiers: usize) -> String {
    match (n_tiers, tier) {
        (3, 0) => "High".into(),
        (3, 1) => "Intermediate".into(),
        (3, 2) => "Low".into(),
        _ => format!("T{}", tier + 1),
    }
}

fn balanced_sizes(n: usize, bins: usize) -> Vec<usize> {
    (0..bins).map(|b| n / bins + usize::from(b < n % bins)).collect()
}

/// Bin index per item by ascending score (ties by position); bins are
/// balanced within one item.
pub fn rank_bins(scores: &[f64], n_bins: usize) -> Vec<usize> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut bins = vec![0; n];
    for (rank, i) in order.into_iter().enumerate() {
        bins[i] = rank * n_bins / n;
    }
    bins
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyMatrix {
    pub n_bins: usize,
    /// `density[a][b]`: share of ones in cluster bin `a` x product bin `b`.
    /// Bin 0 holds the lowest scores.
    pub density: Vec<Vec<f64>>,
    pub x_label: String,
    pub y_label: String,
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
}

impl ContingencyMatrix {
    /// Fraction of horizontally adjacent cell pairs that do not increase
    /// toward higher product bins. 1.0 for a perfectly nested pattern.
    pub fn monotonicity_score(&self) -> f64 {
        let mut ok = 0usize;
        let mut total = 0usize;
        for row in &self.density {
            for w in row.windows(2) {
                total += 1;
                ok += usize::from(w[0] >= w[1]);
            }
        }
        if total == 0 {
            1.0
        } else {
            ok as f64 / total as f64
        }
    }
}

pub fn rank_contingency(
    x_scores: &[f64],
    y_scores: &[f64],
    incidence: &IncidenceMatrix,
    n_bins: usize,
    labels: (&str, &str),
) -> Result<ContingencyMatrix> {
    if x_scores.len() != incidence.n_clusters() {
        return Err(Error::LengthMismatch(incidence.n_clusters(), x_scores.len()));
    }
    if y_scores.len() != incidence.n_products() {
        return Err(Error::LengthMismatch(incidence.n_products(), y_scores.len()));
    }
    if n_bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins, got {n_bins}")));
    }
    let available = x_scores.len().min(y_scores.len());
    if n_bins > available {
        return Err(Error::TooManyBins { n_bins, available });
    }
    let xb = rank_bins(x_scores, n_bins);
    let yb = rank_bins(y_scores, n_bins);
    let mut ones = vec![vec![0usize; n_bins]; n_bins];
    for (c, &a) in xb.iter().enumerate() {
        for (p, &b) in yb.iter().enumerate() {
            ones[a][b] += incidence.m[(c, p)] as usize;
        }
    }
    let row_sizes = balanced_count(&xb, n_bins);
    let col_sizes = balanced_count(&yb, n_bins);
    let density = (0..n_bins)
        .map(|a| {
            (0..n_bins)
                .map(|b| ones[a][b] as f64 / (row_sizes[a] * col_sizes[b]) as f64)
                .collect()
        })
        .collect();
    Ok(ContingencyMatrix {
        n_bins,
        density,
        x_label: labels.0.to_string(),
        y_label: labels.1.to_string(),
        row_sizes,
        col_sizes,
    })
}

fn balanced_count(bins: &[usize], n_bins: usize) -> Vec<usize> {
    let mut sizes = vec![0; n_bins];
    for &b in bins {
        sizes[b] += 1;
    }
    sizes
}
