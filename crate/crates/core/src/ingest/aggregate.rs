//! Re-keying of cell data onto amenity clusters.

use std::collections::BTreeMap;

use crate::cluster::{AmenityCluster, ClusterLocator, DEFAULT_SLACK_M};
use crate::geo::cell_centroid;

use super::records::{LandPriceKey, LandPriceRecord, PopulationCell, PopulationKind};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KindTotals {
    pub residential: f64,
    pub labor: f64,
    pub floating: f64,
}

impl KindTotals {
    pub fn get(&self, kind: PopulationKind) -> f64 {
        match kind {
            PopulationKind::Residential => self.residential,
            PopulationKind::Labor => self.labor,
            PopulationKind::Floating => self.floating,
        }
    }

    fn add(&mut self, kind: PopulationKind, v: f64) {
        match kind {
            PopulationKind::Residential => self.residential += v,
            PopulationKind::Labor => self.labor += v,
            PopulationKind::Floating => self.floating += v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTotals {
    /// Every cluster appears, with zeros when no cell maps to it.
    pub by_cluster: BTreeMap<usize, KindTotals>,
    /// Cells whose centroid lies in no cluster.
    pub outside: KindTotals,
    pub outside_cells: usize,
}

/// Adds each cell's count to the cluster containing its centroid (cluster
/// radius plus [`DEFAULT_SLACK_M`]). Cells are summed in input order.
pub fn aggregate_to_clusters(cells: &[PopulationCell], clusters: &[AmenityCluster]) -> PopulationTotals {
    let locator = ClusterLocator::new(clusters, DEFAULT_SLACK_M);
    let mut by_cluster: BTreeMap<usize, KindTotals> =
        clusters.iter().map(|c| (c.cluster_id, KindTotals::default())).collect();
    let mut outside = KindTotals::default();
    let mut outside_cells = 0;
    for cell in cells {
        match locator.locate(cell_centroid(cell.cell)) {
            Some(id) => by_cluster.entry(id).or_default().add(cell.kind, cell.count),
            None => {
                outside.add(cell.kind, cell.count);
                outside_cells += 1;
            }
        }
    }
    PopulationTotals {
        by_cluster,
        outside,
        outside_cells,
    }
}

/// Cluster-keyed prices pass through; cell-keyed prices are averaged over
/// the cells whose centroid falls inside each cluster. Clusters without any
/// price are absent from the result.
pub fn land_price_by_cluster(records: &[LandPriceRecord], clusters: &[AmenityCluster]) -> BTreeMap<usize, f64> {
    let locator = ClusterLocator::new(clusters, DEFAULT_SLACK_M);
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in records {
        let id = match r.key {
            LandPriceKey::Cluster(id) => Some(id),
            LandPriceKey::Cell(cell) => locator.locate(cell_centroid(cell)),
        };
        if let Some(id) = id {
            let e = acc.entry(id).or_default();
            e.0 += r.price_krw_m2;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoPoint, GridCell};

    fn cluster(id: usize, lat: f64) -> AmenityCluster {
        AmenityCluster {
            cluster_id: id,
            center: GeoPoint::new(lat, 127.0).unwrap(),
            peak_shop_id: format!("s{id}"),
            member_ids: vec![],
            radius_m: 200.0,
            effective_density: 1.0,
        }
    }

    fn cell_at(p: GeoPoint, kind: PopulationKind, count: f64) -> PopulationCell {
        let size = kind.cell_size_m();
        PopulationCell {
            cell: GridCell::new(p.offset(-size / 2.0, -size / 2.0), size).unwrap(),
            kind,
            count,
        }
    }

    #[test]
    fn cell_at_center_goes_to_cluster() {
        let c = [cluster(0, 37.5)];
        let t = aggregate_to_clusters(&[cell_at(c[0].center, PopulationKind::Labor, 42.0)], &c);
        assert_eq!(t.by_cluster[&0].labor, 42.0);
        assert_eq!(t.outside, KindTotals::default());
    }

    #[test]
    fn far_cells_go_outside() {
        let c = [cluster(0, 37.5)];
        let far = GeoPoint::new(37.6, 127.0).unwrap();
        let t = aggregate_to_clusters(&[cell_at(far, PopulationKind::Floating, 5.0)], &c);
        assert_eq!(t.by_cluster[&0], KindTotals::default());
        assert_eq!(t.outside.floating, 5.0);
        assert_eq!(t.outside_cells, 1);
    }

    #[test]
    fn cell_prices_average_within_cluster() {
        let c = [cluster(4, 37.5)];
        let cell = |p: GeoPoint| LandPriceKey::Cell(GridCell::new(p, 100.0).unwrap());
        let recs = [
            LandPriceRecord {
                key: cell(c[0].center.offset(-50.0, -50.0)),
                price_krw_m2: 2.0,
            },
            LandPriceRecord {
                key: cell(c[0].center),
                price_krw_m2: 4.0,
            },
            LandPriceRecord {
                key: cell(GeoPoint::new(37.7, 127.0).unwrap()),
                price_krw_m2: 100.0,
            },
        ];
        let p = land_price_by_cluster(&recs, &c);
        assert_eq!(p.len(), 1);
        assert_eq!(p[&4], 3.0);
    }
}
