//! Synthetic cities with known structure.
//!
//! A Christaller city places central places on nested triangular lattices:
//! level-`l` centers are spaced `base * sqrt(k)^l` apart and stock every
//! product of level `l` or lower. Blob cities are Gaussian shop clusters
//! used to check the clustering stage.
//!
//! All randomness comes from [`Sampler`] (ChaCha20 with explicit uniform,
//! Box-Muller and Knuth-Poisson transforms), so a seed fixes the output.
//!
//! Lattice points are Eisenstein integers `i + j*w` with `w = e^{i pi/3}`.
//! The level-`(l+1)` lattice is the level-`l` lattice multiplied by a
//! generator of norm `k`: `1 + w` (k = 3), `2` (k = 4) or `2 + w` (k = 7).
//! A point's level is how many times that generator divides it.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::cluster::Shop;
use crate::error::{Error, Result};
use crate::geo::{cell_centroid, geodesic_distance, GeoPoint, LocalGrid};
use crate::ingest::{
    CardRecord, LandPriceKey, LandPriceRecord, PopulationCell, PopulationKind, CARD_CELL_M,
};
use crate::market::{ConsumerGroup, Gender};
use crate::sampling::Sampler;

pub const MAX_SHOPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ChristallerConfig {
    pub levels: usize,
    /// Spacing of the lowest-level lattice.
    pub base_spacing_km: f64,
    /// 3, 4 or 7.
    pub k_factor: u32,
    /// Mean shops per center per stocked product.
    pub shops_per_center_per_product: u32,
    pub jitter_m: f64,
    pub seed: u64,
    /// Disc radius; `None` means three top-level spacings.
    pub radius_km: Option<f64>,
    pub products_per_level: usize,
    /// Industries are assigned round-robin over products.
    pub n_industries: usize,
    /// Draw each center's shop count from a Poisson law instead of using the
    /// mean exactly. Exact counts make every center's product mix identical
    /// within a level, which leaves the RCA graph disconnected.
    pub count_noise: bool,
    pub origin: GeoPoint,
}

impl Default for ChristallerConfig {
    fn default() -> Self {
        ChristallerConfig {
            levels: 4,
            base_spacing_km: 1.0,
            k_factor: 3,
            shops_per_center_per_product: 10,
            jitter_m: 50.0,
            seed: 1,
            radius_km: None,
            products_per_level: 1,
            n_industries: 2,
            count_noise: true,
            origin: GeoPoint::new(37.5665, 126.978).expect("valid origin"),
        }
    }
}

impl ChristallerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1..=6).contains(&self.levels) {
            return bad(format!("levels must be in 1..=6, got {}", self.levels));
        }
        if !(self.base_spacing_km.is_finite() && self.base_spacing_km > 0.0) {
            return bad(format!("base_spacing_km must be positive, got {}", self.base_spacing_km));
        }
        if ![3, 4, 7].contains(&self.k_factor) {
            return bad(format!("k_factor must be 3, 4 or 7, got {}", self.k_factor));
        }
        if !(self.jitter_m.is_finite() && self.jitter_m >= 0.0) {
            return bad(format!("jitter_m must be non-negative, got {}", self.jitter_m));
        }
        if self.products_per_level == 0 || self.n_industries == 0 {
            return bad("products_per_level and n_industries must be positive".into());
        }
        if let Some(r) = self.radius_km {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("radius_km must be positive, got {r}"));
            }
        }
        Ok(())
    }

    pub fn spacing_km(&self, level: usize) -> f64 {
        self.base_spacing_km * f64::from(self.k_factor).sqrt().powi(level as i32)
    }

    pub fn radius(&self) -> f64 {
        self.radius_km.unwrap_or_else(|| 3.0 * self.spacing_km(self.levels - 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCenter {
    pub location: GeoPoint,
    pub level: usize,
    /// Products stocked here.
    pub products: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCity {
    pub shops: Vec<Shop>,
    /// Hierarchy level per product code.
    pub product_levels: BTreeMap<String, usize>,
    pub centers: Vec<SyntheticCenter>,
    /// Index into `centers` for each shop.
    pub shop_center: Vec<usize>,
    pub origin: GeoPoint,
}

impl SyntheticCity {
    /// Centers whose distance from the origin is at most `max_km`.
    pub fn centers_within(&self, max_km: f64) -> Vec<usize> {
        (0..self.centers.len())
            .filter(|&c| geodesic_distance(self.origin, self.centers[c].location) <= max_km)
            .collect()
    }
}

pub fn product_code(level: usize, q: usize) -> String {
    format!("L{level}P{q}")
}

/// Divides `i + j*w` by the level generator when possible.
fn divide(k: u32, i: i64, j: i64) -> Option<(i64, i64)> {
    match k {
        3 if (i - j).rem_euclid(3) == 0 => {
            let b = (j - i) / 3;
            Some((i + b, b))
        }
        4 if i % 2 == 0 && j % 2 == 0 => Some((i / 2, j / 2)),
        7 if (3 * i + j).rem_euclid(7) == 0 => Some(((3 * i + j) / 7, (2 * j - i) / 7)),
        _ => None,
    }
}

fn lattice_level(k: u32, mut i: i64, mut j: i64, max_level: usize) -> usize {
    let mut level = 0;
    while level < max_level {
        if i == 0 && j == 0 {
            return max_level;
        }
        match divide(k, i, j) {
            Some((a, b)) => {
                i = a;
                j = b;
                level += 1;
            }
            None => break,
        }
    }
    level
}

/// Lattice points within `radius` (in lattice units), ordered by row then
/// column, as `(east, north, i, j)`.
fn lattice_disc(radius: f64) -> Vec<(f64, f64, i64, i64)> {
    let h = 3f64.sqrt() / 2.0;
    let jmax = (radius / h).ceil() as i64;
    let mut pts = Vec::new();
    for j in -jmax..=jmax {
        let imax = (radius + jmax as f64).ceil() as i64;
        for i in -imax..=imax {
            let (x, y) = (i as f64 + j as f64 / 2.0, j as f64 * h);
            if x * x + y * y <= radius * radius * (1.0 + 1e-12) {
                pts.push((x, y, i, j));
            }
        }
    }
    pts
}

pub fn generate_christaller(cfg: &ChristallerConfig) -> Result<SyntheticCity> {
    cfg.validate()?;
    let units = cfg.radius() / cfg.base_spacing_km;
    // Area bound on the lattice size, checked before enumerating it.
    let approx_points = PI * (units + 1.0).powi(2) / (3f64.sqrt() / 2.0);
    let per_center = cfg.products_per_level as f64 * f64::from(cfg.shops_per_center_per_product);
    if approx_points * per_center > 2.0 * MAX_SHOPS as f64 {
        return Err(Error::TooLarge((approx_points * per_center) as usize));
    }

    let top = cfg.levels - 1;
    let mut product_levels = BTreeMap::new();
    let mut industries = BTreeMap::new();
    for level in 0..cfg.levels {
        for q in 0..cfg.products_per_level {
            let code = product_code(level, q);
            let n = level * cfg.products_per_level + q;
            industries.insert(code.clone(), format!("I{}", n % cfg.n_industries));
            product_levels.insert(code, level);
        }
    }

    let mut rng = Sampler::new(cfg.seed);
    let mut centers = Vec::new();
    let mut shops = Vec::new();
    let mut shop_center = Vec::new();
    for (x, y, i, j) in lattice_disc(units) {
        let level = lattice_level(cfg.k_factor, i, j, top);
        let location = cfg
            .origin
            .offset(y * cfg.base_spacing_km * 1000.0, x * cfg.base_spacing_km * 1000.0);
        let products: Vec<String> = (0..=level)
            .flat_map(|l| (0..cfg.products_per_level).map(move |q| product_code(l, q)))
            .collect();
        let c = centers.len();
        for p in &products {
            let n = if cfg.count_noise {
                rng.poisson(f64::from(cfg.shops_per_center_per_product))
            } else {
                u64::from(cfg.shops_per_center_per_product)
            };
            for _ in 0..n {
                let (north, east) = rng.in_disc(cfg.jitter_m);
                shops.push(Shop {
                    id: format!("s{:07}", shops.len()),
                    location: location.offset(north, east),
                    product_code: p.clone(),
                    industry_code: industries[p].clone(),
                    ward: None,
                });
                shop_center.push(c);
            }
            if shops.len() > MAX_SHOPS {
                return Err(Error::TooLarge(shops.len()));
            }
        }
        centers.push(SyntheticCenter {
            location,
            level,
            products,
        });
    }
    Ok(SyntheticCity {
        shops,
        product_levels,
        centers,
        shop_center,
        origin: cfg.origin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub n_blobs: usize,
    pub shops_per_blob: usize,
    pub sigma_m: f64,
    pub spacing_km: f64,
    /// Products are blob-specific: blob `b` sells `B{b}P0..`.
    pub products_per_blob: usize,
    pub seed: u64,
    pub origin: GeoPoint,
}

/// Blobs sit on a square grid `spacing_km` apart, filled row by row.
pub fn generate_blobs(cfg: &BlobConfig) -> Result<SyntheticCity> {
    if cfg.n_blobs == 0 || cfg.products_per_blob == 0 {
        return Err(Error::InvalidParameter("need at least one blob and one product".into()));
    }
    if !(cfg.sigma_m.is_finite() && cfg.sigma_m >= 0.0 && cfg.spacing_km.is_finite() && cfg.spacing_km > 0.0) {
        return Err(Error::InvalidParameter("sigma_m and spacing_km must be non-negative".into()));
    }
    if cfg.n_blobs * cfg.shops_per_blob > MAX_SHOPS {
        return Err(Error::TooLarge(cfg.n_blobs * cfg.shops_per_blob));
    }
    let cols = (cfg.n_blobs as f64).sqrt().ceil() as usize;
    let mut rng = Sampler::new(cfg.seed);
    let mut city = SyntheticCity {
        shops: Vec::with_capacity(cfg.n_blobs * cfg.shops_per_blob),
        product_levels: BTreeMap::new(),
        centers: Vec::new(),
        shop_center: Vec::new(),
        origin: cfg.origin,
    };
    for b in 0..cfg.n_blobs {
        let (row, col) = (b / cols, b % cols);
        let location = cfg.origin.offset(
            row as f64 * cfg.spacing_km * 1000.0,
            col as f64 * cfg.spacing_km * 1000.0,
        );
        let products: Vec<String> = (0..cfg.products_per_blob).map(|q| format!("B{b}P{q}")).collect();
        for p in &products {
            city.product_levels.insert(p.clone(), 0);
        }
        for s in 0..cfg.shops_per_blob {
            let q = s % cfg.products_per_blob;
            let north = rng.normal(0.0, cfg.sigma_m);
            let east = rng.normal(0.0, cfg.sigma_m);
            city.shops.push(Shop {
                id: format!("s{:07}", city.shops.len()),
                location: location.offset(north, east),
                product_code: products[q].clone(),
                industry_code: format!("I{}", q % 2),
                ward: None,
            });
            city.shop_center.push(b);
        }
        city.centers.push(SyntheticCenter {
            location,
            level: 0,
            products,
        });
    }
    Ok(city)
}

/// 50 m card grid anchored at the city origin.
pub fn card_grid(city: &SyntheticCity) -> LocalGrid {
    LocalGrid::new(city.origin, CARD_CELL_M).expect("positive cell size")
}

/// For every center and stocked product, `groups_per_center` groups buy at
/// the center and live at a uniform distance in `[0, range_profile(level)]`
/// km on a uniform bearing. Home and purchase locations are snapped to the
/// 50 m card grid.
pub fn generate_consumers(
    city: &SyntheticCity,
    groups_per_center: usize,
    range_profile: impl Fn(usize) -> f64,
    seed: u64,
) -> Vec<ConsumerGroup> {
    let grid = card_grid(city);
    let mut rng = Sampler::new(seed);
    let mut groups = Vec::new();
    for center in &city.centers {
        let purchase_cell = grid.cell_of(center.location);
        for product in &center.products {
            let range = range_profile(city.product_levels[product]).max(0.0);
            for _ in 0..groups_per_center {
                let r = rng.uniform_range(0.0, range) * 1000.0;
                let theta = rng.uniform_range(0.0, 2.0 * PI);
                let home = center.location.offset(r * theta.cos(), r * theta.sin());
                let age_decade = 10 * (2 + rng.below(6) as u32);
                let gender = if rng.bernoulli(0.5) { Gender::F } else { Gender::M };
                groups.push(ConsumerGroup {
                    age_decade,
                    gender,
                    home_cell: grid.cell_of(home),
                    purchase_cell,
                    product_code: product.clone(),
                    purchase_count: 1 + rng.poisson(2.0),
                });
            }
        }
    }
    groups
}

/// Attaches spend amounts (5,000 to 50,000 KRW per purchase, whole won) and
/// store counts to consumer groups.
pub fn card_records(groups: Vec<ConsumerGroup>, seed: u64) -> Vec<CardRecord> {
    let mut rng = Sampler::new(seed);
    groups
        .into_iter()
        .map(|group| {
            let amount_krw = (group.purchase_count as f64 * rng.uniform_range(5000.0, 50000.0)).round();
            let n_stores = 1 + rng.below(3) as u32;
            CardRecord {
                group,
                amount_krw,
                n_stores,
            }
        })
        .collect()
}

/// Population cells around each center: a 5 x 5 block of residential and a
/// 3 x 3 block of labor 100 m cells, and a 4 x 4 block of floating 50 m
/// cells. Labor and floating counts grow with the center's level.
pub fn generate_population(city: &SyntheticCity, seed: u64) -> Vec<PopulationCell> {
    let mut rng = Sampler::new(seed);
    let coarse = LocalGrid::new(city.origin, 100.0).expect("positive cell size");
    let fine = LocalGrid::new(city.origin, 50.0).expect("positive cell size");
    let mut cells = Vec::new();
    for center in &city.centers {
        let w = (center.level + 1) as f64;
        let blocks: [(PopulationKind, &LocalGrid, i64, f64); 3] = [
            (PopulationKind::Residential, &coarse, 2, 60.0),
            (PopulationKind::Labor, &coarse, 1, 40.0 * w),
            (PopulationKind::Floating, &fine, 2, 80.0 * w),
        ];
        for (kind, grid, half, mean) in blocks {
            let (r0, c0) = grid.index_of(center.location);
            let hi = if kind == PopulationKind::Floating { half - 1 } else { half };
            for r in r0 - half..=r0 + hi {
                for c in c0 - half..=c0 + hi {
                    cells.push(PopulationCell {
                        cell: grid.cell(r, c),
                        kind,
                        count: rng.poisson(mean) as f64,
                    });
                }
            }
        }
    }
    cells
}

/// One cell-keyed price per center: higher for higher levels, decaying away
/// from the origin, with log-normal noise.
pub fn generate_land_prices(city: &SyntheticCity, seed: u64) -> Vec<LandPriceRecord> {
    let mut rng = Sampler::new(seed);
    let grid = LocalGrid::new(city.origin, 100.0).expect("positive cell size");
    city.centers
        .iter()
        .map(|center| {
            let cell = grid.cell_of(center.location);
            let d = geodesic_distance(city.origin, cell_centroid(cell));
            let base = 2.0e6 * (1.0 + center.level as f64) * (-d / 10.0).exp();
            LandPriceRecord {
                key: LandPriceKey::Cell(cell),
                price_krw_m2: (base * rng.normal(0.0, 0.2).exp()).round().max(1.0),
            }
        })
        .collect()
}
