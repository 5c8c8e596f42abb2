//! Spherical geometry shared by every spatial computation.
//!
//! Distances are great-circle (haversine) distances on a sphere of mean Earth
//! radius. Grid cells and bucket indices use a local equirectangular plane,
//! which is accurate to well under a percent at city scale.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon)
        {
            Ok(GeoPoint { lat, lon })
        } else {
            Err(Error::InvalidCoordinate { lat, lon })
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Moves the point by the given north/east offsets in meters, using the
    /// local scale at this point's latitude. Latitude is clamped to the poles
    /// and longitude wrapped into [-180, 180].
    pub fn offset(&self, north_m: f64, east_m: f64) -> GeoPoint {
        let lat = (self.lat + north_m / 1000.0 / KM_PER_DEGREE).clamp(-90.0, 90.0);
        let cos = self.lat.to_radians().cos().max(1e-12);
        let mut lon = self.lon + east_m / 1000.0 / (KM_PER_DEGREE * cos);
        if lon > 180.0 || lon < -180.0 {
            lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
        }
        GeoPoint { lat, lon }
    }
}

/// Haversine distance in kilometers.
pub fn geodesic_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    // h is symmetric in (a, b) term by term, so the result is exactly symmetric.
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// A square census cell, addressed by its south-west corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub origin: GeoPoint,
    pub size_m: f64,
}

impl GridCell {
    pub fn new(origin: GeoPoint, size_m: f64) -> Result<Self> {
        if !(size_m.is_finite() && size_m > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell size must be positive, got {size_m}"
            )));
        }
        Ok(GridCell { origin, size_m })
    }
}

pub fn cell_centroid(cell: GridCell) -> GeoPoint {
    cell.origin.offset(cell.size_m / 2.0, cell.size_m / 2.0)
}

/// A regular grid of square cells anchored at a south-west corner. Cell
/// `(row, col)` starts `row * size_m` north and `col * size_m` east of the
/// anchor, measured with the anchor's longitude scale.
#[derive(Debug, Clone, Copy)]
pub struct LocalGrid {
    anchor: GeoPoint,
    size_m: f64,
}

impl LocalGrid {
    pub fn new(anchor: GeoPoint, size_m: f64) -> Result<Self> {
        GridCell::new(anchor, size_m)?;
        Ok(LocalGrid { anchor, size_m })
    }

    pub fn cell(&self, row: i64, col: i64) -> GridCell {
        let origin = self
            .anchor
            .offset(row as f64 * self.size_m, col as f64 * self.size_m);
        GridCell {
            origin,
            size_m: self.size_m,
        }
    }

    pub fn index_of(&self, p: GeoPoint) -> (i64, i64) {
        let north_m = (p.lat - self.anchor.lat) * KM_PER_DEGREE * 1000.0;
        let cos = self.anchor.lat.to_radians().cos().max(1e-12);
        let east_m = (p.lon - self.anchor.lon) * KM_PER_DEGREE * 1000.0 * cos;
        (
            (north_m / self.size_m).floor() as i64,
            (east_m / self.size_m).floor() as i64,
        )
    }

    pub fn cell_of(&self, p: GeoPoint) -> GridCell {
        let (r, c) = self.index_of(p);
        self.cell(r, c)
    }
}

/// Bucketed point index for radius and nearest-neighbour queries.
///
/// Candidates come back in ascending index order so callers that sum over
/// them get a deterministic accumulation order.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<GeoPoint>,
    layout: Layout,
}

#[derive(Debug, Clone)]
enum Layout {
    Brute,
    Grid {
        lat0: f64,
        lon0: f64,
        cos0: f64,
        // cos(lat0) / min cos over the extent; inflates query radii so the
        // projected search never misses a point.
        stretch: f64,
        bucket_m: f64,
        buckets: HashMap<(i64, i64), Vec<usize>>,
    },
}

const MAX_GRID_SPAN_DEG: f64 = 2.0;
const MAX_GRID_ABS_LAT: f64 = 80.0;

impl SpatialIndex {
    pub fn new(points: Vec<GeoPoint>, bucket_m: f64) -> Self {
        let layout = Self::grid_layout(&points, bucket_m).unwrap_or(Layout::Brute);
        SpatialIndex { points, layout }
    }

    /// An index that always scans every point.
    pub fn brute_force(points: Vec<GeoPoint>) -> Self {
        SpatialIndex {
            points,
            layout: Layout::Brute,
        }
    }

    fn grid_layout(points: &[GeoPoint], bucket_m: f64) -> Option<Layout> {
        if points.is_empty() || !(bucket_m.is_finite() && bucket_m > 0.0) {
            return None;
        }
        let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            lat_min = lat_min.min(p.lat);
            lat_max = lat_max.max(p.lat);
            lon_min = lon_min.min(p.lon);
            lon_max = lon_max.max(p.lon);
        }
        if lat_max - lat_min > MAX_GRID_SPAN_DEG
            || lon_max - lon_min > MAX_GRID_SPAN_DEG
            || lat_min.abs().max(lat_max.abs()) > MAX_GRID_ABS_LAT
        {
            return None;
        }
        let lat0 = (lat_min + lat_max) / 2.0;
        let lon0 = (lon_min + lon_max) / 2.0;
        let cos0 = lat0.to_radians().cos();
        let cos_min = lat_min.abs().max(lat_max.abs()).to_radians().cos();
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut layout = Layout::Grid {
            lat0,
            lon0,
            cos0,
            stretch: cos0 / cos_min,
            bucket_m,
            buckets: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let key = layout.key(*p).expect("grid layout");
            buckets.entry(key).or_default().push(i);
        }
        if let Layout::Grid { buckets: b, .. } = &mut layout {
            *b = buckets;
        }
        Some(layout)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> GeoPoint {
        self.points[i]
    }

    /// Superset of the points within `radius_m` of `p`, ascending.
    pub fn candidates(&self, p: GeoPoint, radius_m: f64) -> Vec<usize> {
        match &self.layout {
            Layout::Brute => (0..self.points.len()).collect(),
            Layout::Grid {
                stretch,
                bucket_m,
                buckets,
                ..
            } => {
                let (x, y) = self.layout.project(p).expect("grid layout");
                let reach = radius_m * stretch * 1.001 + 1.0;
                let bx0 = ((x - reach) / bucket_m).floor() as i64;
                let bx1 = ((x + reach) / bucket_m).floor() as i64;
                let by0 = ((y - reach) / bucket_m).floor() as i64;
                let by1 = ((y + reach) / bucket_m).floor() as i64;
                // Queries far outside the indexed extent (or with huge radii)
                // would enumerate too many empty buckets.
                let span = (bx1 - bx0 + 1).saturating_mul(by1 - by0 + 1);
                if span > 4 * buckets.len() as i64 + 64 {
                    return (0..self.points.len()).collect();
                }
                let mut out = Vec::new();
                for bx in bx0..=bx1 {
                    for by in by0..=by1 {
                        if let Some(v) = buckets.get(&(bx, by)) {
                            out.extend_from_slice(v);
                        }
                    }
                }
                out.sort_unstable();
                out
            }
        }
    }

    /// Points with geodesic distance at most `radius_m`, ascending by index,
    /// paired with their distance in kilometers.
    pub fn within(&self, p: GeoPoint, radius_m: f64) -> Vec<(usize, f64)> {
        let limit_km = radius_m / 1000.0;
        self.candidates(p, radius_m)
            .into_iter()
            .filter_map(|i| {
                let d = geodesic_distance(p, self.points[i]);
                (d <= limit_km).then_some((i, d))
            })
            .collect()
    }

    /// Closest point within `max_radius_m`; ties go to the smaller index.
    pub fn nearest(&self, p: GeoPoint, max_radius_m: f64) -> Option<(usize, f64)> {
        self.within(p, max_radius_m)
            .into_iter()
            .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            })
    }
}

impl Layout {
    fn project(&self, p: GeoPoint) -> Option<(f64, f64)> {
        match self {
            Layout::Brute => None,
            Layout::Grid {
                lat0, lon0, cos0, ..
            } => Some((
                (p.lon - lon0) * KM_PER_DEGREE * 1000.0 * cos0,
                (p.lat - lat0) * KM_PER_DEGREE * 1000.0,
            )),
        }
    }

    fn key(&self, p: GeoPoint) -> Option<(i64, i64)> {
        let (x, y) = self.project(p)?;
        match self {
            Layout::Grid { bucket_m, .. } => {
                Some(((x / bucket_m).floor() as i64, (y / bucket_m).floor() as i64))
            }
            Layout::Brute => None,
        }
    }
}
