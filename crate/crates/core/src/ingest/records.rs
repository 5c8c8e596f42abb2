//! CSV readers and writers for the interchange files.
//!
//! Every reader takes the exact header for its file, validates each row and
//! collects malformed rows as [`Reject`]s keyed by their line number. A read
//! aborts once rejects reach one percent of the data rows. Writers emit
//! floats in shortest round-trip form, so reading a written file and writing
//! it again reproduces the same bytes.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use csv::StringRecord;

use crate::cluster::Shop;
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GridCell};
use crate::market::{ConsumerGroup, Gender};

/// Side of the square cells consumer groups are aggregated on.
pub const CARD_CELL_M: f64 = 50.0;

/// Reads abort when rejected rows reach this share of all data rows.
pub const MAX_REJECT_FRACTION: f64 = 0.01;

pub const SHOPS_HEADER: &[&str] = &["id", "lat", "lon", "product_code", "industry_code"];
pub const POPULATION_HEADER: &[&str] = &["kind", "cell_lat", "cell_lon", "size_m", "count"];
pub const CARD_HEADER: &[&str] = &[
    "age_decade",
    "gender",
    "home_cell_lat",
    "home_cell_lon",
    "purchase_cell_lat",
    "purchase_cell_lon",
    "product_code",
    "purchase_count",
    "amount_krw",
    "n_stores",
];
pub const LAND_PRICE_CLUSTER_HEADER: &[&str] = &["cluster_id", "price_krw_m2"];
pub const LAND_PRICE_CELL_HEADER: &[&str] = &["cell_lat", "cell_lon", "size_m", "price_krw_m2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PopulationKind {
    Residential,
    Labor,
    Floating,
}

impl PopulationKind {
    pub const ALL: [PopulationKind; 3] = [
        PopulationKind::Residential,
        PopulationKind::Labor,
        PopulationKind::Floating,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PopulationKind::Residential => "residential",
            PopulationKind::Labor => "labor",
            PopulationKind::Floating => "floating",
        }
    }

    /// Census cells are 100 m; mobile-phone floating counts are 50 m.
    pub fn cell_size_m(&self) -> f64 {
        match self {
            PopulationKind::Residential | PopulationKind::Labor => 100.0,
            PopulationKind::Floating => 50.0,
        }
    }
}

impl FromStr for PopulationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "residential" => Ok(PopulationKind::Residential),
            "labor" => Ok(PopulationKind::Labor),
            "floating" => Ok(PopulationKind::Floating),
            _ => Err(format!("unknown population kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationCell {
    pub cell: GridCell,
    pub kind: PopulationKind,
    pub count: f64,
}

/// An aggregated card-spending row: one consumer group with its spend.
#[derive(Debug, Clone, PartialEq)]
pub struct CardRecord {
    pub group: ConsumerGroup,
    pub amount_krw: f64,
    pub n_stores: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LandPriceKey {
    Cluster(usize),
    Cell(GridCell),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandPriceRecord {
    pub key: LandPriceKey,
    pub price_krw_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number in the source file.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub rejects: Vec<Reject>,
}

enum RowError {
    Reject(String),
    Fatal(Error),
}

impl From<String> for RowError {
    fn from(s: String) -> Self {
        RowError::Reject(s)
    }
}

fn field<'a>(rec: &'a StringRecord, i: usize, name: &str) -> std::result::Result<&'a str, String> {
    rec.get(i).ok_or_else(|| format!("missing field `{name}`"))
}

fn number<T: FromStr>(rec: &StringRecord, i: usize, name: &str) -> std::result::Result<T, String> {
    let s = field(rec, i, name)?;
    s.parse().map_err(|_| format!("{name}: cannot parse `{s}`"))
}

fn real(rec: &StringRecord, i: usize, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = number(rec, i, name)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name}: non-finite value"))
    }
}

fn non_negative(rec: &StringRecord, i: usize, name: &str) -> std::result::Result<f64, String> {
    let v = real(rec, i, name)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{name}: negative value {v}"))
    }
}

fn text(rec: &StringRecord, i: usize, name: &str) -> std::result::Result<String, String> {
    let s = field(rec, i, name)?;
    if s.is_empty() {
        Err(format!("{name}: empty"))
    } else {
        Ok(s.to_string())
    }
}

fn point(rec: &StringRecord, i: usize, lat: &str, lon: &str) -> std::result::Result<GeoPoint, String> {
    let (la, lo) = (real(rec, i, lat)?, real(rec, i + 1, lon)?);
    GeoPoint::new(la, lo).map_err(|e| e.to_string())
}

/// Drives a reader: checks the header against `headers` (the index of the
/// matching variant is passed to `parse`) and applies the reject policy.
fn read_table<R: Read, T>(
    input: R,
    file: &str,
    headers: &[&[&str]],
    mut parse: impl FnMut(usize, &StringRecord, usize) -> std::result::Result<T, RowError>,
) -> Result<Parsed<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = reader.records();
    let expected = headers
        .iter()
        .map(|h| h.join(","))
        .collect::<Vec<_>>()
        .join("` or `");
    let header = match rows.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => {
            return Err(Error::Malformed {
                file: file.into(),
                reason: format!("unreadable header: {e}"),
            })
        }
        None => {
            return Err(Error::BadHeader {
                expected,
                found: String::new(),
            })
        }
    };
    let found: Vec<&str> = header.iter().collect();
    let variant = headers
        .iter()
        .position(|h| *h == found.as_slice())
        .ok_or_else(|| Error::BadHeader {
            expected,
            found: found.join(","),
        })?;
    let width = headers[variant].len();

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for (k, row) in rows.enumerate() {
        // Header is line 1; fall back to the record count when the reader
        // cannot report a position.
        let fallback = k + 2;
        match row {
            Err(e) => {
                let line = e.position().map_or(fallback, |p| p.line() as usize);
                rejects.push(Reject {
                    row: line,
                    reason: e.to_string(),
                });
            }
            Ok(rec) => {
                let line = rec.position().map_or(fallback, |p| p.line() as usize);
                if rec.len() != width {
                    rejects.push(Reject {
                        row: line,
                        reason: format!("expected {width} fields, found {}", rec.len()),
                    });
                    continue;
                }
                match parse(variant, &rec, line) {
                    Ok(t) => records.push(t),
                    Err(RowError::Reject(reason)) => rejects.push(Reject { row: line, reason }),
                    Err(RowError::Fatal(e)) => return Err(e),
                }
            }
        }
    }
    let total = records.len() + rejects.len();
    if !rejects.is_empty() && rejects.len() as f64 >= MAX_REJECT_FRACTION * total as f64 {
        return Err(Error::TooManyRejects {
            rejected: rejects.len(),
            total,
        });
    }
    Ok(Parsed { records, rejects })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

pub fn parse_shops<R: Read>(input: R) -> Result<Parsed<Shop>> {
    let with_ward: Vec<&str> = SHOPS_HEADER.iter().copied().chain(["ward"]).collect();
    let mut seen = HashSet::new();
    read_table(input, "shops", &[SHOPS_HEADER, &with_ward], |variant, rec, line| {
        let id = text(rec, 0, "id")?;
        let location = point(rec, 1, "lat", "lon")?;
        let product_code = text(rec, 3, "product_code")?;
        let industry_code = text(rec, 4, "industry_code")?;
        let ward = match variant {
            1 => Some(field(rec, 5, "ward")?).filter(|w| !w.is_empty()).map(str::to_string),
            _ => None,
        };
        if !seen.insert(id.clone()) {
            return Err(RowError::Fatal(Error::DuplicateId { id, row: line }));
        }
        Ok(Shop {
            id,
            location,
            product_code,
            industry_code,
            ward,
        })
    })
}

pub fn read_shops(path: &Path) -> Result<Parsed<Shop>> {
    parse_shops(open(path)?).map_err(|e| relabel(e, path))
}

pub fn parse_population<R: Read>(input: R) -> Result<Parsed<PopulationCell>> {
    read_table(input, "population", &[POPULATION_HEADER], |_, rec, _| {
        let kind: PopulationKind = field(rec, 0, "kind")?.parse()?;
        let origin = point(rec, 1, "cell_lat", "cell_lon")?;
        let size_m = real(rec, 3, "size_m")?;
        if size_m != kind.cell_size_m() {
            return Err(format!(
                "{} cells must be {} m, found {size_m}",
                kind.as_str(),
                kind.cell_size_m()
            )
            .into());
        }
        let count = non_negative(rec, 4, "count")?;
        Ok(PopulationCell {
            cell: GridCell { origin, size_m },
            kind,
            count,
        })
    })
}

pub fn read_population(path: &Path) -> Result<Parsed<PopulationCell>> {
    parse_population(open(path)?).map_err(|e| relabel(e, path))
}

pub fn parse_cards<R: Read>(input: R) -> Result<Parsed<CardRecord>> {
    read_table(input, "card", &[CARD_HEADER], |_, rec, _| {
        let age_decade: u32 = number(rec, 0, "age_decade")?;
        let gender = match field(rec, 1, "gender")? {
            "F" => Gender::F,
            "M" => Gender::M,
            g => return Err(format!("gender: expected F or M, found `{g}`").into()),
        };
        let home = point(rec, 2, "home_cell_lat", "home_cell_lon")?;
        let purchase = point(rec, 4, "purchase_cell_lat", "purchase_cell_lon")?;
        let product_code = text(rec, 6, "product_code")?;
        let purchase_count: u64 = number(rec, 7, "purchase_count")?;
        let amount_krw = non_negative(rec, 8, "amount_krw")?;
        let n_stores: u32 = number(rec, 9, "n_stores")?;
        Ok(CardRecord {
            group: ConsumerGroup {
                age_decade,
                gender,
                home_cell: GridCell {
                    origin: home,
                    size_m: CARD_CELL_M,
                },
                purchase_cell: GridCell {
                    origin: purchase,
                    size_m: CARD_CELL_M,
                },
                product_code,
                purchase_count,
            },
            amount_krw,
            n_stores,
        })
    })
}

pub fn read_cards(path: &Path) -> Result<Parsed<CardRecord>> {
    parse_cards(open(path)?).map_err(|e| relabel(e, path))
}

/// Accepts either the cluster-keyed or the cell-keyed layout.
pub fn parse_land_prices<R: Read>(input: R) -> Result<Parsed<LandPriceRecord>> {
    read_table(
        input,
        "land_price",
        &[LAND_PRICE_CLUSTER_HEADER, LAND_PRICE_CELL_HEADER],
        |variant, rec, _| {
            let (key, col) = if variant == 0 {
                (LandPriceKey::Cluster(number(rec, 0, "cluster_id")?), 1)
            } else {
                let origin = point(rec, 0, "cell_lat", "cell_lon")?;
                let size_m = real(rec, 2, "size_m")?;
                if size_m <= 0.0 {
                    return Err(format!("size_m must be positive, found {size_m}").into());
                }
                (LandPriceKey::Cell(GridCell { origin, size_m }), 3)
            };
            let price_krw_m2 = real(rec, col, "price_krw_m2")?;
            if price_krw_m2 <= 0.0 {
                return Err(format!("price_krw_m2 must be positive, found {price_krw_m2}").into());
            }
            Ok(LandPriceRecord { key, price_krw_m2 })
        },
    )
}

pub fn read_land_prices(path: &Path) -> Result<Parsed<LandPriceRecord>> {
    parse_land_prices(open(path)?).map_err(|e| relabel(e, path))
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Malformed { reason, .. } => Error::Malformed {
            file: file_name(path),
            reason,
        },
        other => other,
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<output>", e))
}

/// Writes the optional ward column only when some shop carries a ward.
pub fn write_shops<W: Write>(out: W, shops: &[Shop]) -> Result<()> {
    let with_ward = shops.iter().any(|s| s.ward.is_some());
    let mut w = writer(out);
    let mut header: Vec<&str> = SHOPS_HEADER.to_vec();
    if with_ward {
        header.push("ward");
    }
    w.write_record(&header)?;
    for s in shops {
        let mut row = vec![
            s.id.clone(),
            s.location.lat().to_string(),
            s.location.lon().to_string(),
            s.product_code.clone(),
            s.industry_code.clone(),
        ];
        if with_ward {
            row.push(s.ward.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    flush(w)
}

pub fn write_population<W: Write>(out: W, cells: &[PopulationCell]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(POPULATION_HEADER)?;
    for c in cells {
        w.write_record([
            c.kind.as_str().to_string(),
            c.cell.origin.lat().to_string(),
            c.cell.origin.lon().to_string(),
            c.cell.size_m.to_string(),
            c.count.to_string(),
        ])?;
    }
    flush(w)
}

pub fn write_cards<W: Write>(out: W, cards: &[CardRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CARD_HEADER)?;
    for c in cards {
        let g = &c.group;
        w.write_record([
            g.age_decade.to_string(),
            g.gender.as_str().to_string(),
            g.home_cell.origin.lat().to_string(),
            g.home_cell.origin.lon().to_string(),
            g.purchase_cell.origin.lat().to_string(),
            g.purchase_cell.origin.lon().to_string(),
            g.product_code.clone(),
            g.purchase_count.to_string(),
            c.amount_krw.to_string(),
            c.n_stores.to_string(),
        ])?;
    }
    flush(w)
}

/// All records must share one key kind; an empty slice writes the
/// cluster-keyed header.
pub fn write_land_prices<W: Write>(out: W, prices: &[LandPriceRecord]) -> Result<()> {
    let cell_keyed = matches!(prices.first(), Some(LandPriceRecord { key: LandPriceKey::Cell(_), .. }));
    let mut w = writer(out);
    w.write_record(if cell_keyed {
        LAND_PRICE_CELL_HEADER
    } else {
        LAND_PRICE_CLUSTER_HEADER
    })?;
    for p in prices {
        match (p.key, cell_keyed) {
            (LandPriceKey::Cluster(id), false) => {
                w.write_record([id.to_string(), p.price_krw_m2.to_string()])?
            }
            (LandPriceKey::Cell(c), true) => w.write_record([
                c.origin.lat().to_string(),
                c.origin.lon().to_string(),
                c.size_m.to_string(),
                p.price_krw_m2.to_string(),
            ])?,
            _ => {
                return Err(Error::InvalidParameter(
                    "land price records mix cluster and cell keys".into(),
                ))
            }
        }
    }
    flush(w)
}

pub fn write_rejects<W: Write>(out: W, rejects: &[Reject]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["row", "reason"])?;
    for r in rejects {
        w.write_record([r.row.to_string(), r.reason.clone()])?;
    }
    flush(w)
}
