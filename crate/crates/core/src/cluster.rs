//! Amenity-cluster detection.
//!
//! Every shop gets an effective shop count `A_i = sum_j exp(-gamma * d_ij)`
//! (self term included). Local maxima of `A` within a fixed window become
//! cluster centers, and each shop joins its nearest center inside an
//! assignment cutoff.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{geodesic_distance, GeoPoint, SpatialIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct Shop {
    pub id: String,
    pub location: GeoPoint,
    pub product_code: String,
    pub industry_code: String,
    pub ward: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    /// Decay rate per kilometer.
    pub gamma: f64,
    pub peak_radius_m: f64,
    /// Peaks with a lower effective count are discarded; 0 disables.
    pub min_peak_density: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            gamma: 7.58,
            peak_radius_m: 300.0,
            min_peak_density: 0.0,
        }
    }
}

impl DecayParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.peak_radius_m.is_finite() && self.peak_radius_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "peak radius must be positive, got {}",
                self.peak_radius_m
            )));
        }
        if !self.min_peak_density.is_finite() {
            return Err(Error::InvalidParameter("min_peak_density must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowParams {
    /// Shops farther than this from every peak stay unassigned.
    pub cutoff_m: f64,
    pub min_cluster_size: usize,
}

impl Default for GrowParams {
    fn default() -> Self {
        GrowParams {
            cutoff_m: 1000.0,
            min_cluster_size: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// Full `O(N^2)` sum.
    Exact,
    /// Grid-accelerated sum that drops terms smaller than
    /// [`APPROX_TERM_TOLERANCE`], so each `A_i` is low by less than
    /// `N * APPROX_TERM_TOLERANCE`.
    #[default]
    Approximate,
}

pub const APPROX_TERM_TOLERANCE: f64 = 1.2e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct AmenityCluster {
    pub cluster_id: usize,
    /// Location of the peak shop.
    pub center: GeoPoint,
    pub peak_shop_id: String,
    /// Sorted member shop ids.
    pub member_ids: Vec<String>,
    pub radius_m: f64,
    /// `A` at the peak.
    pub effective_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub clusters: Vec<AmenityCluster>,
    /// Sorted ids of shops that belong to no cluster.
    pub unassigned: Vec<String>,
}

impl Clustering {
    pub fn n_assigned(&self) -> usize {
        self.clusters.iter().map(|c| c.member_ids.len()).sum()
    }

    pub fn mean_radius_m(&self) -> f64 {
        if self.clusters.is_empty() {
            return 0.0;
        }
        self.clusters.iter().map(|c| c.radius_m).sum::<f64>() / self.clusters.len() as f64
    }
}

pub fn effective_counts(shops: &[Shop], params: &DecayParams, mode: DistanceMode) -> Result<Vec<f64>> {
    if shops.is_empty() {
        return Err(Error::NoShops);
    }
    params.validate()?;
    let gamma = params.gamma;
    let points: Vec<GeoPoint> = shops.iter().map(|s| s.location).collect();
    let counts = match mode {
        DistanceMode::Exact => points
            .par_iter()
            .map(|&p| {
                points
                    .iter()
                    .map(|&q| (-gamma * geodesic_distance(p, q)).exp())
                    .sum()
            })
            .collect(),
        DistanceMode::Approximate => {
            let bucket_m = 3.0 / gamma * 1000.0;
            let cutoff_m = (1.0 / APPROX_TERM_TOLERANCE).ln() / gamma * 1000.0;
            let index = SpatialIndex::new(points.clone(), bucket_m);
            points
                .par_iter()
                .map(|&p| {
                    index
                        .within(p, cutoff_m)
                        .into_iter()
                        .map(|(_, d)| (-gamma * d).exp())
                        .sum()
                })
                .collect()
        }
    };
    Ok(counts)
}

/// `a` beats `b` when its density is higher, or equal with a smaller id.
fn outranks(shops: &[Shop], a: &[f64], i: usize, j: usize) -> bool {
    a[i] > a[j] || (a[i] == a[j] && shops[i].id < shops[j].id)
}

/// Indices (ascending) of shops whose `A` is maximal within the peak window.
pub fn detect_peaks(shops: &[Shop], a: &[f64], params: &DecayParams) -> Result<Vec<usize>> {
    if a.len() != shops.len() {
        return Err(Error::LengthMismatch(shops.len(), a.len()));
    }
    params.validate()?;
    let index = SpatialIndex::new(shops.iter().map(|s| s.location).collect(), params.peak_radius_m);
    let peaks = (0..shops.len())
        .into_par_iter()
        .filter(|&i| {
            a[i] >= params.min_peak_density
                && index
                    .within(shops[i].location, params.peak_radius_m)
                    .into_iter()
                    .all(|(j, _)| j == i || outranks(shops, a, i, j))
        })
        .collect();
    Ok(peaks)
}

pub fn grow_clusters(
    shops: &[Shop],
    a: &[f64],
    peaks: &[usize],
    params: &GrowParams,
) -> Result<Clustering> {
    if a.len() != shops.len() {
        return Err(Error::LengthMismatch(shops.len(), a.len()));
    }
    if peaks.is_empty() {
        return Err(Error::InvalidParameter("no peaks to grow clusters from".into()));
    }
    if !(params.cutoff_m.is_finite() && params.cutoff_m >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "assignment cutoff must be non-negative, got {}",
            params.cutoff_m
        )));
    }
    let peak_index = SpatialIndex::new(
        peaks.iter().map(|&p| shops[p].location).collect(),
        params.cutoff_m.max(1.0),
    );
    // Owner is a position in `peaks`.
    let owner: Vec<Option<(usize, f64)>> = shops
        .par_iter()
        .map(|shop| {
            peak_index
                .within(shop.location, params.cutoff_m)
                .into_iter()
                .fold(None, |best: Option<(usize, f64)>, (k, d)| match best {
                    None => Some((k, d)),
                    Some((bk, bd)) => {
                        let better = d < bd || (d == bd && outranks(shops, a, peaks[k], peaks[bk]));
                        if better {
                            Some((k, d))
                        } else {
                            best
                        }
                    }
                })
        })
        .collect();

    let mut members: Vec<Vec<(usize, f64)>> = vec![Vec::new(); peaks.len()];
    let mut unassigned = Vec::new();
    for (i, o) in owner.into_iter().enumerate() {
        match o {
            Some((k, d)) => members[k].push((i, d)),
            None => unassigned.push(shops[i].id.clone()),
        }
    }

    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&x, &y| {
        let (px, py) = (peaks[x], peaks[y]);
        a[py]
            .total_cmp(&a[px])
            .then_with(|| shops[px].id.cmp(&shops[py].id))
    });

    let mut clusters = Vec::new();
    for k in order {
        let group = &members[k];
        if group.len() < params.min_cluster_size.max(1) {
            unassigned.extend(group.iter().map(|&(i, _)| shops[i].id.clone()));
            continue;
        }
        let peak = peaks[k];
        let mut member_ids: Vec<String> = group.iter().map(|&(i, _)| shops[i].id.clone()).collect();
        member_ids.sort();
        let radius_km = group.iter().map(|&(_, d)| d).fold(0.0, f64::max);
        clusters.push(AmenityCluster {
            cluster_id: clusters.len(),
            center: shops[peak].location,
            peak_shop_id: shops[peak].id.clone(),
            member_ids,
            radius_m: radius_km * 1000.0,
            effective_density: a[peak],
        });
    }
    unassigned.sort();
    Ok(Clustering {
        clusters,
        unassigned,
    })
}

/// Runs the whole detection. Shops are processed in id order internally, so
/// the result does not depend on input order.
pub fn detect_clusters(
    shops: &[Shop],
    decay: &DecayParams,
    grow: &GrowParams,
    mode: DistanceMode,
) -> Result<Clustering> {
    if shops.is_empty() {
        return Err(Error::NoShops);
    }
    let mut canonical = shops.to_vec();
    canonical.sort_by(|x, y| x.id.cmp(&y.id));
    let a = effective_counts(&canonical, decay, mode)?;
    let peaks = detect_peaks(&canonical, &a, decay)?;
    if peaks.is_empty() {
        // Every shop fell below min_peak_density.
        return Ok(Clustering {
            clusters: Vec::new(),
            unassigned: canonical.into_iter().map(|s| s.id).collect(),
        });
    }
    grow_clusters(&canonical, &a, &peaks, grow)
}

pub const DEFAULT_SLACK_M: f64 = 100.0;

/// Maps arbitrary points onto detected clusters.
pub struct ClusterLocator<'a> {
    clusters: &'a [AmenityCluster],
    index: SpatialIndex,
    reach_m: f64,
    slack_m: f64,
}

impl<'a> ClusterLocator<'a> {
    pub fn new(clusters: &'a [AmenityCluster], slack_m: f64) -> Self {
        let max_radius = clusters.iter().map(|c| c.radius_m).fold(0.0, f64::max);
        let reach_m = max_radius + slack_m;
        ClusterLocator {
            clusters,
            index: SpatialIndex::new(clusters.iter().map(|c| c.center).collect(), reach_m.max(1.0)),
            reach_m,
            slack_m,
        }
    }

    /// The nearest cluster if `p` lies within its radius plus slack.
    pub fn locate(&self, p: GeoPoint) -> Option<usize> {
        let (k, d_km) = self.index.nearest(p, self.reach_m)?;
        let c = &self.clusters[k];
        (d_km * 1000.0 <= c.radius_m + self.slack_m).then_some(c.cluster_id)
    }
}

pub fn cluster_of_point(clusters: &[AmenityCluster], p: GeoPoint, slack_m: f64) -> Option<usize> {
    ClusterLocator::new(clusters, slack_m).locate(p)
}
