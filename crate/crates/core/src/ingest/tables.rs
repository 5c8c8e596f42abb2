//! Assembly of the two regression tables: market boundary rows (one per
//! product and nearest-market pair) and consumer rows (one per group).

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::cluster::{AmenityCluster, Shop};
use crate::complexity::ComplexityScores;
use crate::econometrics::{columns, Table};
use crate::error::{Error, Result};
use crate::geo::{cell_centroid, geodesic_distance};
use crate::market::{Gender, MarketDistanceRecord};

use super::aggregate::PopulationTotals;
use super::records::CardRecord;
use super::wards::WardMap;

/// Share of rows whose join keys may be unknown before the build fails.
pub const MAX_JOIN_MISMATCH: f64 = 0.05;

/// Populations enter the market table in thousands of people.
pub const POPULATION_SCALE: f64 = 1000.0;
/// Land price differences enter in millions of KRW per m^2.
pub const LAND_PRICE_SCALE: f64 = 1.0e6;

pub struct RegressionInputs<'a> {
    pub shops: &'a [Shop],
    pub clusters: &'a [AmenityCluster],
    pub scores: &'a ComplexityScores,
    pub market_records: &'a [MarketDistanceRecord],
    pub cards: &'a [CardRecord],
    pub population: &'a PopulationTotals,
    pub land_prices: &'a BTreeMap<usize, f64>,
    pub wards: &'a WardMap,
}

/// `rows_in == rows_out + unmatched + missing`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub rows_in: usize,
    pub rows_out: usize,
    /// Rows whose cluster or product key is unknown to the scores.
    pub unmatched: usize,
    /// Rows dropped for a missing covariate.
    pub missing: usize,
}

#[derive(Debug, Clone)]
pub struct RegressionTables {
    pub market: Table,
    pub consumer: Table,
    pub market_report: BuildReport,
    pub consumer_report: BuildReport,
}

/// Most common industry code per product, ties to the smaller code.
pub fn product_industries(shops: &[Shop]) -> BTreeMap<String, String> {
    let mut tally: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for s in shops {
        *tally
            .entry(&s.product_code)
            .or_default()
            .entry(&s.industry_code)
            .or_default() += 1;
    }
    tally
        .into_iter()
        .map(|(p, inds)| {
            let mut best = ("", 0);
            for (i, n) in inds {
                if n > best.1 {
                    best = (i, n);
                }
            }
            (p.to_string(), best.0.to_string())
        })
        .collect()
}

fn check_mismatch(what: &'static str, unmatched: usize, total: usize) -> Result<()> {
    if total > 0 && unmatched as f64 > MAX_JOIN_MISMATCH * total as f64 {
        return Err(Error::JoinMismatch { what, unmatched, total });
    }
    Ok(())
}

struct Lookup<'a> {
    eci: HashMap<usize, (f64, f64)>,
    pci: HashMap<&'a str, f64>,
    industry: BTreeMap<String, String>,
}

pub fn build_regression_tables(inputs: &RegressionInputs<'_>) -> Result<RegressionTables> {
    let s = inputs.scores;
    let lookup = Lookup {
        eci: s
            .clusters
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, (s.eci[i], s.diversity[i] as f64)))
            .collect(),
        pci: s.products.iter().map(String::as_str).zip(s.pci.iter().copied()).collect(),
        industry: product_industries(inputs.shops),
    };
    let (market, market_report) = market_table(inputs, &lookup)?;
    let (consumer, consumer_report) = consumer_table(inputs, &lookup)?;
    Ok(RegressionTables {
        market,
        consumer,
        market_report,
        consumer_report,
    })
}

fn market_table(inputs: &RegressionInputs<'_>, lk: &Lookup<'_>) -> Result<(Table, BuildReport)> {
    let wards: HashMap<usize, String> = inputs
        .clusters
        .iter()
        .map(|c| (c.cluster_id, inputs.wards.cluster_ward(c)))
        .collect();
    let mut report = BuildReport {
        rows_in: inputs.market_records.len(),
        ..Default::default()
    };
    let mut num: [Vec<f64>; 8] = Default::default();
    let mut cat: [Vec<String>; 5] = Default::default();
    for r in inputs.market_records {
        let (Some(&pci), Some(&(eci_a, div_a)), Some(&(eci_b, div_b))) = (
            lk.pci.get(r.product_code.as_str()),
            lk.eci.get(&r.cluster_a),
            lk.eci.get(&r.cluster_b),
        ) else {
            report.unmatched += 1;
            continue;
        };
        let covariates = (
            inputs.population.by_cluster.get(&r.cluster_a),
            inputs.population.by_cluster.get(&r.cluster_b),
            inputs.land_prices.get(&r.cluster_a),
            inputs.land_prices.get(&r.cluster_b),
            wards.get(&r.cluster_a),
            lk.industry.get(&r.product_code),
        );
        let (Some(pa), Some(pb), Some(la), Some(lb), Some(ward), Some(industry)) = covariates else {
            report.missing += 1;
            continue;
        };
        let values = [
            r.distance_km,
            pci,
            (eci_a - eci_b).abs(),
            (div_a - div_b).abs(),
            (pa.labor - pb.labor).abs() / POPULATION_SCALE,
            (pa.floating - pb.floating).abs() / POPULATION_SCALE,
            (pa.residential - pb.residential).abs() / POPULATION_SCALE,
            (la - lb).abs() / LAND_PRICE_SCALE,
        ];
        for (col, v) in num.iter_mut().zip(values) {
            col.push(v);
        }
        let labels = [
            ward.clone(),
            industry.clone(),
            r.product_code.clone(),
            r.cluster_a.to_string(),
            r.cluster_b.to_string(),
        ];
        for (col, v) in cat.iter_mut().zip(labels) {
            col.push(v);
        }
    }
    check_mismatch("market distance", report.unmatched, report.rows_in)?;
    report.rows_out = num[0].len();

    use columns::*;
    let mut t = Table::new();
    let num_names = [DIST, PCI, D_ECI, D_DIVERSITY, D_LABOR, D_FLOATING, D_RESIDENTIAL, D_LAND_PRICE];
    for (name, col) in num_names.into_iter().zip(num) {
        t.push_numeric(name, col)?;
    }
    for (name, col) in [WARD, INDUSTRY, PRODUCT, CLUSTER_A, CLUSTER_B].into_iter().zip(cat) {
        t.push_categorical(name, col)?;
    }
    Ok((t, report))
}

fn consumer_table(inputs: &RegressionInputs<'_>, lk: &Lookup<'_>) -> Result<(Table, BuildReport)> {
    let mut report = BuildReport {
        rows_in: inputs.cards.len(),
        ..Default::default()
    };
    let mut num: [Vec<f64>; 4] = Default::default();
    let mut cat: [Vec<String>; 4] = Default::default();
    for card in inputs.cards {
        let g = &card.group;
        let Some(&pci) = lk.pci.get(g.product_code.as_str()) else {
            report.unmatched += 1;
            continue;
        };
        let Some(industry) = lk.industry.get(&g.product_code) else {
            report.missing += 1;
            continue;
        };
        let home = cell_centroid(g.home_cell);
        let values = [
            geodesic_distance(home, cell_centroid(g.purchase_cell)),
            pci,
            g.purchase_count as f64,
            f64::from(u8::from(g.gender == Gender::F)),
        ];
        for (col, v) in num.iter_mut().zip(values) {
            col.push(v);
        }
        let labels = [
            g.age_decade.to_string(),
            inputs.wards.ward_of(home),
            industry.clone(),
            g.product_code.clone(),
        ];
        for (col, v) in cat.iter_mut().zip(labels) {
            col.push(v);
        }
    }
    check_mismatch("card", report.unmatched, report.rows_in)?;
    report.rows_out = num[0].len();

    use columns::*;
    let mut t = Table::new();
    for (name, col) in [DIST, PCI, COUNT, FEMALE].into_iter().zip(num) {
        t.push_numeric(name, col)?;
    }
    for (name, col) in [AGE_GROUP, WARD, INDUSTRY, PRODUCT].into_iter().zip(cat) {
        t.push_categorical(name, col)?;
    }
    Ok((t, report))
}

/// Columns in table order; numbers in shortest round-trip form.
pub fn write_table<W: Write>(out: W, table: &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(table.names())?;
    let cols: Vec<_> = table.columns().map(|(_, c)| c).collect();
    for row in 0..table.n_rows() {
        w.write_record(cols.iter().map(|c| c.cell(row)))?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}
