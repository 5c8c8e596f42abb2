//! Market-boundary geometry per product.
//!
//! A product has a market in every cluster where its RCA is at least one.
//! The spacing between a product's markets proxies its demand threshold;
//! consumer travel distances proxy its range.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::cluster::AmenityCluster;
use crate::complexity::IncidenceMatrix;
use crate::geo::{cell_centroid, geodesic_distance, GeoPoint, GridCell};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarketSet {
    pub product_code: String,
    /// Ascending cluster ids.
    pub market_cluster_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketDistanceRecord {
    pub product_code: String,
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub distance_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerGroup {
    pub age_decade: u32,
    pub gender: Gender,
    pub home_cell: GridCell,
    pub purchase_cell: GridCell,
    pub product_code: String,
    pub purchase_count: u64,
}

pub fn market_sets(incidence: &IncidenceMatrix) -> Vec<MarketSet> {
    (0..incidence.n_products())
        .filter_map(|p| {
            let mut ids: Vec<usize> = (0..incidence.n_clusters())
                .filter(|&c| incidence.m[(c, p)] == 1)
                .map(|c| incidence.clusters[c])
                .collect();
            ids.sort_unstable();
            (!ids.is_empty()).then(|| MarketSet {
                product_code: incidence.products[p].clone(),
                market_cluster_ids: ids,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarketDistances {
    /// Sorted by (product, cluster_a).
    pub records: Vec<MarketDistanceRecord>,
    /// Products with a single market.
    pub skipped: Vec<String>,
    /// Products whose markets reference unknown cluster ids.
    pub unknown_clusters: Vec<usize>,
}

/// One record per (product, market cluster): that market's nearest other
/// market of the same product. Ties go to the smaller cluster id.
pub fn min_market_distances(sets: &[MarketSet], clusters: &[AmenityCluster]) -> MarketDistances {
    let centers: HashMap<usize, GeoPoint> = clusters.iter().map(|c| (c.cluster_id, c.center)).collect();
    let mut unknown = Vec::new();
    let mut skipped = Vec::new();
    let mut work = Vec::new();
    for set in sets {
        let known: Vec<(usize, GeoPoint)> = set
            .market_cluster_ids
            .iter()
            .filter_map(|id| match centers.get(id) {
                Some(p) => Some((*id, *p)),
                None => {
                    unknown.push(*id);
                    None
                }
            })
            .collect();
        if known.len() < 2 {
            skipped.push(set.product_code.clone());
        } else {
            work.push((set.product_code.as_str(), known));
        }
    }
    let mut records: Vec<MarketDistanceRecord> = work
        .par_iter()
        .flat_map_iter(|(product, markets)| {
            markets.iter().map(move |&(a, pa)| {
                let (b, d) = markets
                    .iter()
                    .filter(|(b, _)| *b != a)
                    .map(|&(b, pb)| (b, geodesic_distance(pa, pb)))
                    .fold(None, |best: Option<(usize, f64)>, (b, d)| match best {
                        Some((bb, bd)) if bd < d || (bd == d && bb < b) => best,
                        _ => Some((b, d)),
                    })
                    .expect("at least two markets");
                MarketDistanceRecord {
                    product_code: product.to_string(),
                    cluster_a: a,
                    cluster_b: b,
                    distance_km: d,
                }
            })
        })
        .collect();
    records.sort_by(|x, y| {
        x.product_code
            .cmp(&y.product_code)
            .then(x.cluster_a.cmp(&y.cluster_a))
    });
    unknown.sort_unstable();
    unknown.dedup();
    MarketDistances {
        records,
        skipped,
        unknown_clusters: unknown,
    }
}

/// Keeps only each product's closest pair (smallest `(a, b)` on ties).
pub fn collapse_per_product(records: &[MarketDistanceRecord]) -> Vec<MarketDistanceRecord> {
    let mut best: BTreeMap<&str, &MarketDistanceRecord> = BTreeMap::new();
    for r in records {
        best.entry(&r.product_code)
            .and_modify(|cur| {
                let key = |x: &MarketDistanceRecord| (x.cluster_a.min(x.cluster_b), x.cluster_a.max(x.cluster_b));
                if r.distance_km < cur.distance_km
                    || (r.distance_km == cur.distance_km && key(r) < key(cur))
                {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    best.into_values().cloned().collect()
}

/// Mean of each product's per-market minimum distances, keyed by product.
pub fn mean_market_spacing(sets: &[MarketSet], clusters: &[AmenityCluster]) -> BTreeMap<String, f64> {
    spacing_from_records(&min_market_distances(sets, clusters).records)
}

pub fn spacing_from_records(records: &[MarketDistanceRecord]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.product_code.clone()).or_default();
        e.0 += r.distance_km;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Home-to-purchase distance per group, kilometers, between cell centroids.
pub fn travel_distances(groups: &[ConsumerGroup]) -> Vec<f64> {
    groups
        .par_iter()
        .map(|g| geodesic_distance(cell_centroid(g.home_cell), cell_centroid(g.purchase_cell)))
        .collect()
}
