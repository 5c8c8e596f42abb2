//! Stage files exchanged between pipeline steps.
//!
//! Each stage writes plain CSV into an output directory and later stages
//! read it back. Floats use shortest round-trip formatting, so a file read
//! and rewritten is byte-identical.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::cluster::{AmenityCluster, Clustering, Shop};
use crate::complexity::{ComplexityMethod, ComplexityScores, CountMatrix, IncidenceMatrix};
use crate::econometrics::ContingencyMatrix;
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::market::MarketDistanceRecord;

pub const CLUSTERS: &str = "clusters.csv";
pub const ASSIGNMENTS: &str = "assignments.csv";
pub const INCIDENCE: &str = "incidence.csv";
pub const ECI: &str = "eci.csv";
pub const PCI: &str = "pci.csv";
pub const MARKET_DISTANCES: &str = "market_distances.csv";
pub const MARKET_SPACING: &str = "market_spacing.csv";
pub const TRAVEL_DISTANCES: &str = "travel_distances.csv";

const CLUSTERS_HEADER: &[&str] = &[
    "cluster_id",
    "center_lat",
    "center_lon",
    "peak_shop_id",
    "n_shops",
    "radius_m",
    "effective_density",
];
const ASSIGNMENTS_HEADER: &[&str] = &["shop_id", "cluster_id"];
const INCIDENCE_HEADER: &[&str] = &["cluster_id", "product_code", "count", "rca", "m"];
const ECI_HEADER: &[&str] = &["cluster_id", "eci", "eci_raw", "diversity", "tier"];
const PCI_HEADER: &[&str] = &["product_code", "pci", "pci_raw", "ubiquity", "uniqueness"];
const MARKET_HEADER: &[&str] = &["product_code", "cluster_a", "cluster_b", "distance_km"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<output>", e))
}

fn malformed(file: &str, reason: impl Into<String>) -> Error {
    Error::Malformed {
        file: file.into(),
        reason: reason.into(),
    }
}

/// Reads all rows after checking the exact header. Any bad row fails the
/// read: stage files are machine-written, so damage means a broken run.
fn rows<R: Read>(input: R, file: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut it = reader.records();
    let found = match it.next() {
        Some(h) => h.map_err(|e| malformed(file, e.to_string()))?,
        None => return Err(malformed(file, "empty file")),
    };
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::BadHeader {
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    it.map(|r| r.map_err(|e| malformed(file, e.to_string()))).collect()
}

struct Row<'a> {
    rec: &'a csv::StringRecord,
    file: &'a str,
    line: usize,
}

impl<'a> Row<'a> {
    fn new(rec: &'a csv::StringRecord, file: &'a str, k: usize) -> Self {
        Row { rec, file, line: k + 2 }
    }

    fn str(&self, i: usize) -> Result<&'a str> {
        self.rec
            .get(i)
            .ok_or_else(|| malformed(self.file, format!("line {}: missing field {}", self.line, i + 1)))
    }

    fn parse<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        let s = self.str(i)?;
        s.parse()
            .map_err(|_| malformed(self.file, format!("line {}: cannot parse `{s}`", self.line)))
    }

    fn real(&self, i: usize) -> Result<f64> {
        let v: f64 = self.parse(i)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(malformed(self.file, format!("line {}: non-finite value", self.line)))
        }
    }
}

pub fn write_clusters<W: Write>(out: W, clusters: &[AmenityCluster]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CLUSTERS_HEADER)?;
    for c in clusters {
        w.write_record([
            c.cluster_id.to_string(),
            c.center.lat().to_string(),
            c.center.lon().to_string(),
            c.peak_shop_id.clone(),
            c.member_ids.len().to_string(),
            c.radius_m.to_string(),
            c.effective_density.to_string(),
        ])?;
    }
    finish(w)
}

/// Clusters with empty member lists, plus the member count each row claims.
pub fn parse_clusters<R: Read>(input: R) -> Result<Vec<(AmenityCluster, usize)>> {
    let recs = rows(input, CLUSTERS, CLUSTERS_HEADER)?;
    let mut seen = std::collections::HashSet::new();
    recs.iter()
        .enumerate()
        .map(|(k, rec)| {
            let r = Row::new(rec, CLUSTERS, k);
            let cluster_id: usize = r.parse(0)?;
            if !seen.insert(cluster_id) {
                return Err(malformed(CLUSTERS, format!("line {}: duplicate cluster {cluster_id}", r.line)));
            }
            let center = GeoPoint::new(r.real(1)?, r.real(2)?)?;
            Ok((
                AmenityCluster {
                    cluster_id,
                    center,
                    peak_shop_id: r.str(3)?.to_string(),
                    member_ids: Vec::new(),
                    radius_m: r.real(5)?,
                    effective_density: r.real(6)?,
                },
                r.parse(4)?,
            ))
        })
        .collect()
}

/// One row per shop in input order; unassigned shops have an empty id.
pub fn write_assignments<W: Write>(out: W, shops: &[Shop], clustering: &Clustering) -> Result<()> {
    let owner: HashMap<&str, usize> = clustering
        .clusters
        .iter()
        .flat_map(|c| c.member_ids.iter().map(move |m| (m.as_str(), c.cluster_id)))
        .collect();
    let mut w = writer(out);
    w.write_record(ASSIGNMENTS_HEADER)?;
    for s in shops {
        let id = owner.get(s.id.as_str()).map(ToString::to_string).unwrap_or_default();
        w.write_record([s.id.as_str(), &id])?;
    }
    finish(w)
}

pub fn parse_assignments<R: Read>(input: R) -> Result<Vec<(String, Option<usize>)>> {
    let recs = rows(input, ASSIGNMENTS, ASSIGNMENTS_HEADER)?;
    recs.iter()
        .enumerate()
        .map(|(k, rec)| {
            let r = Row::new(rec, ASSIGNMENTS, k);
            let cluster = match r.str(1)? {
                "" => None,
                _ => Some(r.parse(1)?),
            };
            Ok((r.str(0)?.to_string(), cluster))
        })
        .collect()
}

/// Rebuilds a clustering from the two cluster files, checking that the
/// member counts agree.
pub fn read_clustering<R1: Read, R2: Read>(clusters: R1, assignments: R2) -> Result<Clustering> {
    let parsed = parse_clusters(clusters)?;
    let pos: HashMap<usize, usize> = parsed.iter().enumerate().map(|(i, (c, _))| (c.cluster_id, i)).collect();
    let mut clusters: Vec<AmenityCluster> = parsed.iter().map(|(c, _)| c.clone()).collect();
    let mut unassigned = Vec::new();
    for (shop, cluster) in parse_assignments(assignments)? {
        match cluster {
            Some(id) => {
                let i = *pos
                    .get(&id)
                    .ok_or_else(|| malformed(ASSIGNMENTS, format!("unknown cluster {id}")))?;
                clusters[i].member_ids.push(shop);
            }
            None => unassigned.push(shop),
        }
    }
    for (c, (_, n)) in clusters.iter_mut().zip(&parsed) {
        if c.member_ids.len() != *n {
            return Err(malformed(
                ASSIGNMENTS,
                format!("cluster {} has {} members, expected {n}", c.cluster_id, c.member_ids.len()),
            ));
        }
        c.member_ids.sort();
    }
    unassigned.sort();
    Ok(Clustering { clusters, unassigned })
}

/// Long format, one row per cluster x product cell, row-major.
pub fn write_incidence<W: Write>(out: W, counts: &CountMatrix, inc: &IncidenceMatrix) -> Result<()> {
    if counts.clusters != inc.clusters || counts.products != inc.products {
        return Err(Error::InvalidParameter("count and incidence labels differ".into()));
    }
    let mut w = writer(out);
    w.write_record(INCIDENCE_HEADER)?;
    for (r, c) in inc.clusters.iter().enumerate() {
        for (k, p) in inc.products.iter().enumerate() {
            w.write_record([
                c.to_string(),
                p.clone(),
                counts.counts[r][k].to_string(),
                inc.rca[(r, k)].to_string(),
                inc.m[(r, k)].to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn parse_incidence<R: Read>(input: R) -> Result<(CountMatrix, IncidenceMatrix)> {
    let recs = rows(input, INCIDENCE, INCIDENCE_HEADER)?;
    let mut clusters: Vec<usize> = Vec::new();
    let mut products: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), (u64, f64, u8)> = BTreeMap::new();
    let mut cpos: HashMap<usize, usize> = HashMap::new();
    let mut ppos: HashMap<String, usize> = HashMap::new();
    for (k, rec) in recs.iter().enumerate() {
        let r = Row::new(rec, INCIDENCE, k);
        let c: usize = r.parse(0)?;
        let p = r.str(1)?;
        let m: u8 = r.parse(4)?;
        if m > 1 {
            return Err(malformed(INCIDENCE, format!("line {}: m must be 0 or 1", r.line)));
        }
        let ci = *cpos.entry(c).or_insert_with(|| {
            clusters.push(c);
            clusters.len() - 1
        });
        let pi = *ppos.entry(p.to_string()).or_insert_with(|| {
            products.push(p.to_string());
            products.len() - 1
        });
        if cells.insert((ci, pi), (r.parse(2)?, r.real(3)?, m)).is_some() {
            return Err(malformed(INCIDENCE, format!("line {}: duplicate cell", r.line)));
        }
    }
    let (n, k) = (clusters.len(), products.len());
    if n == 0 || k == 0 {
        return Err(Error::EmptyMatrix);
    }
    if cells.len() != n * k {
        return Err(malformed(INCIDENCE, format!("{} of {} cells present", cells.len(), n * k)));
    }
    let at = |r: usize, c: usize| cells[&(r, c)];
    let counts = CountMatrix {
        clusters: clusters.clone(),
        products: products.clone(),
        counts: (0..n).map(|r| (0..k).map(|c| at(r, c).0).collect()).collect(),
    };
    let inc = IncidenceMatrix {
        clusters,
        products,
        rca: DMatrix::from_fn(n, k, |r, c| at(r, c).1),
        m: DMatrix::from_fn(n, k, |r, c| at(r, c).2),
    };
    Ok((counts, inc))
}

pub fn write_eci<W: Write>(out: W, scores: &ComplexityScores, tiers: &[String]) -> Result<()> {
    if tiers.len() != scores.clusters.len() {
        return Err(Error::LengthMismatch(scores.clusters.len(), tiers.len()));
    }
    let mut w = writer(out);
    w.write_record(ECI_HEADER)?;
    for i in 0..scores.clusters.len() {
        w.write_record([
            scores.clusters[i].to_string(),
            scores.eci[i].to_string(),
            scores.eci_raw[i].to_string(),
            scores.diversity[i].to_string(),
            tiers[i].clone(),
        ])?;
    }
    finish(w)
}

pub fn write_pci<W: Write>(out: W, scores: &ComplexityScores, uniqueness: &[f64]) -> Result<()> {
    if uniqueness.len() != scores.products.len() {
        return Err(Error::LengthMismatch(scores.products.len(), uniqueness.len()));
    }
    let mut w = writer(out);
    w.write_record(PCI_HEADER)?;
    for i in 0..scores.products.len() {
        w.write_record([
            scores.products[i].clone(),
            scores.pci[i].to_string(),
            scores.pci_raw[i].to_string(),
            scores.ubiquity[i].to_string(),
            uniqueness[i].to_string(),
        ])?;
    }
    finish(w)
}

/// Scores as written by [`write_eci`] and [`write_pci`], with the tier
/// labels and uniqueness values alongside. `iterations` is not stored and
/// reads back as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredScores {
    pub scores: ComplexityScores,
    pub tiers: Vec<String>,
    pub uniqueness: Vec<f64>,
}

pub fn parse_scores<R1: Read, R2: Read>(eci: R1, pci: R2, method: ComplexityMethod) -> Result<StoredScores> {
    let mut s = ComplexityScores {
        clusters: Vec::new(),
        products: Vec::new(),
        eci_raw: Vec::new(),
        eci: Vec::new(),
        pci_raw: Vec::new(),
        pci: Vec::new(),
        diversity: Vec::new(),
        ubiquity: Vec::new(),
        method,
        iterations: 0,
    };
    let mut tiers = Vec::new();
    let mut uniqueness = Vec::new();
    for (k, rec) in rows(eci, ECI, ECI_HEADER)?.iter().enumerate() {
        let r = Row::new(rec, ECI, k);
        s.clusters.push(r.parse(0)?);
        s.eci.push(r.real(1)?);
        s.eci_raw.push(r.real(2)?);
        s.diversity.push(r.parse(3)?);
        tiers.push(r.str(4)?.to_string());
    }
    for (k, rec) in rows(pci, PCI, PCI_HEADER)?.iter().enumerate() {
        let r = Row::new(rec, PCI, k);
        s.products.push(r.str(0)?.to_string());
        s.pci.push(r.real(1)?);
        s.pci_raw.push(r.real(2)?);
        s.ubiquity.push(r.parse(3)?);
        uniqueness.push(r.real(4)?);
    }
    Ok(StoredScores {
        scores: s,
        tiers,
        uniqueness,
    })
}

pub fn write_market_distances<W: Write>(out: W, records: &[MarketDistanceRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(MARKET_HEADER)?;
    for r in records {
        w.write_record([
            r.product_code.clone(),
            r.cluster_a.to_string(),
            r.cluster_b.to_string(),
            r.distance_km.to_string(),
        ])?;
    }
    finish(w)
}

pub fn parse_market_distances<R: Read>(input: R) -> Result<Vec<MarketDistanceRecord>> {
    let recs = rows(input, MARKET_DISTANCES, MARKET_HEADER)?;
    recs.iter()
        .enumerate()
        .map(|(k, rec)| {
            let r = Row::new(rec, MARKET_DISTANCES, k);
            Ok(MarketDistanceRecord {
                product_code: r.str(0)?.to_string(),
                cluster_a: r.parse(1)?,
                cluster_b: r.parse(2)?,
                distance_km: r.real(3)?,
            })
        })
        .collect()
}

pub fn write_market_spacing<W: Write>(
    out: W,
    spacing: &BTreeMap<String, f64>,
    n_markets: &BTreeMap<String, usize>,
) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["product_code", "n_markets", "mean_min_distance_km"])?;
    for (p, d) in spacing {
        let n = n_markets.get(p).copied().unwrap_or(0);
        w.write_record([p.clone(), n.to_string(), d.to_string()])?;
    }
    finish(w)
}

pub fn write_travel_distances<W: Write>(out: W, products: &[&str], distances: &[f64]) -> Result<()> {
    if products.len() != distances.len() {
        return Err(Error::LengthMismatch(products.len(), distances.len()));
    }
    let mut w = writer(out);
    w.write_record(["group", "product_code", "distance_km"])?;
    for (i, (p, d)) in products.iter().zip(distances).enumerate() {
        w.write_record([i.to_string(), p.to_string(), d.to_string()])?;
    }
    finish(w)
}

/// Wide layout: one row per x bin (lowest scores first), one column per y bin.
pub fn write_contingency<W: Write>(out: W, m: &ContingencyMatrix) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec![format!("{}_bin", m.x_label)];
    header.extend((0..m.n_bins).map(|b| format!("{}_bin_{b}", m.y_label)));
    w.write_record(&header)?;
    for (a, row) in m.density.iter().enumerate() {
        let mut rec = vec![a.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}
