//! Ward labels for fixed effects.
//!
//! When every shop carries a ward, a point takes the ward of its nearest
//! shop and a cluster the most common ward among its members. Otherwise
//! wards are synthesized from a 5 x 5 grid over the shops' bounding box.

use std::collections::{BTreeMap, HashMap};

use crate::cluster::{AmenityCluster, Shop};
use crate::error::{Error, Result};
use crate::geo::{geodesic_distance, GeoPoint, SpatialIndex};

pub const WARD_GRID: usize = 5;

/// Search radius before falling back to a scan over every shop.
const NEAREST_SHOP_RADIUS_M: f64 = 2000.0;

#[derive(Debug, Clone)]
pub enum WardMap {
    Grid {
        min_lat: f64,
        min_lon: f64,
        max_lat: f64,
        max_lon: f64,
    },
    Labeled {
        index: SpatialIndex,
        labels: Vec<String>,
        by_shop: HashMap<String, String>,
    },
}

impl WardMap {
    pub fn from_shops(shops: &[Shop]) -> Result<WardMap> {
        if shops.is_empty() {
            return Err(Error::NoShops);
        }
        if shops.iter().all(|s| s.ward.is_some()) {
            let labels: Vec<String> = shops.iter().map(|s| s.ward.clone().unwrap_or_default()).collect();
            let by_shop = shops.iter().map(|s| s.id.clone()).zip(labels.iter().cloned()).collect();
            let index = SpatialIndex::new(shops.iter().map(|s| s.location).collect(), NEAREST_SHOP_RADIUS_M);
            return Ok(WardMap::Labeled { index, labels, by_shop });
        }
        let lats = shops.iter().map(|s| s.location.lat());
        let lons = shops.iter().map(|s| s.location.lon());
        Ok(WardMap::Grid {
            min_lat: lats.clone().fold(f64::INFINITY, f64::min),
            max_lat: lats.fold(f64::NEG_INFINITY, f64::max),
            min_lon: lons.clone().fold(f64::INFINITY, f64::min),
            max_lon: lons.fold(f64::NEG_INFINITY, f64::max),
        })
    }

    pub fn is_synthesized(&self) -> bool {
        matches!(self, WardMap::Grid { .. })
    }

    /// Points outside the bounding box snap to the edge bins.
    pub fn ward_of(&self, p: GeoPoint) -> String {
        match self {
            WardMap::Grid {
                min_lat,
                min_lon,
                max_lat,
                max_lon,
            } => {
                let bin = |v: f64, lo: f64, hi: f64| {
                    if hi > lo {
                        (((v - lo) / (hi - lo) * WARD_GRID as f64).floor() as i64).clamp(0, WARD_GRID as i64 - 1)
                    } else {
                        0
                    }
                };
                let r = bin(p.lat(), *min_lat, *max_lat);
                let c = bin(p.lon(), *min_lon, *max_lon);
                format!("W{r}{c}")
            }
            WardMap::Labeled { index, labels, .. } => {
                let k = index.nearest(p, NEAREST_SHOP_RADIUS_M).map(|(k, _)| k).unwrap_or_else(|| {
                    (0..index.len())
                        .min_by(|&a, &b| {
                            geodesic_distance(p, index.point(a)).total_cmp(&geodesic_distance(p, index.point(b)))
                        })
                        .unwrap_or(0)
                });
                labels[k].clone()
            }
        }
    }

    /// Majority ward of the members (ties to the smaller label), or the
    /// ward of the center when members carry no labels.
    pub fn cluster_ward(&self, cluster: &AmenityCluster) -> String {
        if let WardMap::Labeled { by_shop, .. } = self {
            let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
            for id in &cluster.member_ids {
                if let Some(w) = by_shop.get(id) {
                    *tally.entry(w).or_default() += 1;
                }
            }
            let best = tally.iter().fold(None, |best: Option<(&str, usize)>, (&w, &n)| match best {
                Some((_, bn)) if bn >= n => best,
                _ => Some((w, n)),
            });
            if let Some((w, _)) = best {
                return w.to_string();
            }
        }
        self.ward_of(cluster.center)
    }
}
