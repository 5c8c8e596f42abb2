//! The regress and correlate stages.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use anyhow::Context as _;
use clap::Args;
use log::warn;
use serde_json::{json, Value};
use urban_centrality::artifacts;
use urban_centrality::econometrics::{
    columns, ols_fit, pearson, point_biserial, rank_contingency, render_regression_table, spearman, spec_consumer,
    spec_market_boundary, ConsumerVariant, MarketVariant, ModelColumn, RegressionResult, Table, INTERCEPT,
};
use urban_centrality::ingest::{
    self, aggregate_to_clusters, build_regression_tables, land_price_by_cluster, write_table, PopulationTotals,
    RegressionInputs, WardMap,
};

use crate::output::{num, open_input, open_stage, write_file, write_json};
use crate::stages::{load_cards, load_clustering, load_scores, load_shops, report_rejects};
use crate::{Context, InputError};

#[derive(Debug, Args)]
pub struct RegressArgs {}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Rank bins per axis for contingency matrices [default: 10]
    #[arg(long)]
    pub bins: Option<usize>,
}

fn load_population(ctx: &Context, path: &std::path::Path) -> anyhow::Result<Vec<ingest::PopulationCell>> {
    let parsed = ingest::parse_population(open_input(path)?).with_context(|| format!("reading {}", path.display()))?;
    report_rejects(ctx, "population", &parsed.rejects)?;
    Ok(parsed.records)
}

fn load_land_prices(ctx: &Context, path: &std::path::Path) -> anyhow::Result<Vec<ingest::LandPriceRecord>> {
    let parsed =
        ingest::parse_land_prices(open_input(path)?).with_context(|| format!("reading {}", path.display()))?;
    report_rejects(ctx, "land_price", &parsed.rejects)?;
    Ok(parsed.records)
}

const REPORT_ROWS: &[(&str, &str)] = &[
    ("PCI", columns::PCI),
    ("Delta ECI", columns::D_ECI),
    ("Delta Diversity", columns::D_DIVERSITY),
    ("Count", columns::COUNT),
    ("Female", columns::FEMALE),
    ("Delta Labor Pop.", columns::D_LABOR),
    ("Delta Floating Pop.", columns::D_FLOATING),
    ("Delta Residential Pop.", columns::D_RESIDENTIAL),
    ("Delta Land Price", columns::D_LAND_PRICE),
    ("Constant", INTERCEPT),
];

fn model_json(name: &str, r: &RegressionResult) -> Value {
    let terms: Vec<Value> = r
        .terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            json!({
                "term": t,
                "coef": num(r.coefficients[i]),
                "se": num(r.std_errors[i]),
                "t": num(r.t_stats[i]),
                "p": num(r.p_values[i]),
            })
        })
        .collect();
    json!({
        "model": name,
        "n_obs": r.n_obs,
        "df_resid": r.df_resid,
        "r2": num(r.r2),
        "adj_r2": num(r.adj_r2),
        "residual_std_error": num(r.residual_std_error),
        "f_stat": num(r.f_stat),
        "f_p_value": num(r.f_p_value),
        "fe_included": r.fe_included,
        "fe_dropped": r.fe_dropped,
        "terms": terms,
    })
}

fn fit(name: &str, table: &Table, spec: anyhow::Result<urban_centrality::econometrics::DesignSpec>) -> anyhow::Result<RegressionResult> {
    let fit = ols_fit(table, &spec?).with_context(|| format!("fitting model {name}"))?;
    for fe in &fit.fe_dropped {
        warn!("model {name}: {fe} has a single level; fixed effect dropped");
    }
    Ok(fit)
}

pub fn regress(ctx: &Context, _args: &RegressArgs) -> anyhow::Result<()> {
    let dir = &ctx.out_dir;
    let stored = load_scores(dir)?;
    let market_records =
        artifacts::parse_market_distances(open_stage(dir, artifacts::MARKET_DISTANCES, "market")?)?;
    let clustering = load_clustering(dir)?;
    let shops = load_shops(ctx)?;
    let population = aggregate_to_clusters(&load_population(ctx, &ctx.input("population")?)?, &clustering.clusters);
    let prices = land_price_by_cluster(&load_land_prices(ctx, &ctx.input("land_price")?)?, &clustering.clusters);
    let cards = match ctx.optional_input("cards")? {
        Some(p) => load_cards(ctx, &p)?,
        None => Vec::new(),
    };
    let wards = WardMap::from_shops(&shops)?;
    let tables = build_regression_tables(&RegressionInputs {
        shops: &shops,
        clusters: &clustering.clusters,
        scores: &stored.scores,
        market_records: &market_records,
        cards: &cards,
        population: &population,
        land_prices: &prices,
        wards: &wards,
    })?;
    write_file(dir, "regression_market.csv", |w| Ok(write_table(w, &tables.market)?))?;
    write_file(dir, "regression_consumer.csv", |w| Ok(write_table(w, &tables.consumer)?))?;

    let mut models: Vec<(&str, &str, RegressionResult)> = vec![
        (
            "(1)",
            "Market distance (km)",
            fit("(1)", &tables.market, spec_market_boundary(&tables.market, MarketVariant::Base).map_err(Into::into))?,
        ),
        (
            "(2)",
            "Market distance (km)",
            fit(
                "(2)",
                &tables.market,
                spec_market_boundary(&tables.market, MarketVariant::WithComplexityGaps).map_err(Into::into),
            )?,
        ),
    ];
    if !cards.is_empty() {
        models.push((
            "(3)",
            "Travel distance (km)",
            fit("(3)", &tables.consumer, spec_consumer(&tables.consumer, ConsumerVariant::Base).map_err(Into::into))?,
        ));
        models.push((
            "(4)",
            "Travel distance (km)",
            fit(
                "(4)",
                &tables.consumer,
                spec_consumer(&tables.consumer, ConsumerVariant::WithCount).map_err(Into::into),
            )?,
        ));
    }
    let columns: Vec<ModelColumn<'_>> = models
        .iter()
        .map(|(_, dep, r)| ModelColumn {
            dependent: dep,
            result: r,
        })
        .collect();
    let report = render_regression_table(
        "Market boundary and consumer range against product complexity",
        &columns,
        REPORT_ROWS,
    );
    write_file(dir, "regression_report.txt", |w| {
        use std::io::Write;
        w.write_all(report.as_bytes())?;
        Ok(())
    })?;
    let accounting = |r: &ingest::BuildReport| {
        json!({"rows_in": r.rows_in, "rows_out": r.rows_out, "unmatched": r.unmatched, "missing_covariates": r.missing})
    };
    write_json(
        dir,
        "regression_summary.json",
        &json!({
            "market_rows": accounting(&tables.market_report),
            "consumer_rows": accounting(&tables.consumer_report),
            "population_outside_clusters": {
                "cells": population.outside_cells,
                "residential": num(population.outside.residential),
                "labor": num(population.outside.labor),
                "floating": num(population.outside.floating),
            },
            "wards_synthesized": wards.is_synthesized(),
            "models": models.iter().map(|(n, _, r)| model_json(n, r)).collect::<Vec<_>>(),
        }),
    )?;
    print!("{report}");
    Ok(())
}

struct Correlation {
    variable: String,
    n: usize,
    pearson: Option<f64>,
    spearman: Option<f64>,
}

fn correlate_pair(variable: &str, x: &[f64], y: &[f64]) -> Correlation {
    Correlation {
        variable: variable.to_string(),
        n: x.len(),
        pearson: pearson(x, y).ok(),
        spearman: spearman(x, y).ok(),
    }
}

fn write_correlations(ctx: &Context, name: &str, target: &str, rows: &[Correlation]) -> anyhow::Result<()> {
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    write_file(&ctx.out_dir, name, |w| {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["target", "variable", "n", "pearson", "spearman"])?;
        for r in rows {
            out.write_record([target, &r.variable, &r.n.to_string(), &fmt(r.pearson), &fmt(r.spearman)])?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(())
}

/// ECI against each cluster characteristic, over clusters where it is known.
fn cluster_characteristics(
    ctx: &Context,
    eci: &HashMap<usize, f64>,
    clustering: &urban_centrality::cluster::Clustering,
    diversity: &HashMap<usize, f64>,
) -> anyhow::Result<Vec<Correlation>> {
    let mut vars: Vec<(String, BTreeMap<usize, f64>)> = vec![
        ("diversity".into(), diversity.iter().map(|(&k, &v)| (k, v)).collect()),
        (
            "n_shops".into(),
            clustering.clusters.iter().map(|c| (c.cluster_id, c.member_ids.len() as f64)).collect(),
        ),
        (
            "radius_m".into(),
            clustering.clusters.iter().map(|c| (c.cluster_id, c.radius_m)).collect(),
        ),
        (
            "effective_density".into(),
            clustering.clusters.iter().map(|c| (c.cluster_id, c.effective_density)).collect(),
        ),
    ];
    if let Some(path) = ctx.optional_input("population")? {
        let totals: PopulationTotals = aggregate_to_clusters(&load_population(ctx, &path)?, &clustering.clusters);
        for kind in ingest::PopulationKind::ALL {
            vars.push((
                format!("{}_pop", kind.as_str()),
                totals.by_cluster.iter().map(|(&k, t)| (k, t.get(kind))).collect(),
            ));
        }
    }
    if let Some(path) = ctx.optional_input("land_price")? {
        vars.push((
            "land_price".into(),
            land_price_by_cluster(&load_land_prices(ctx, &path)?, &clustering.clusters),
        ));
    }
    Ok(vars
        .iter()
        .map(|(name, values)| {
            let (x, y): (Vec<f64>, Vec<f64>) = values
                .iter()
                .filter_map(|(k, &v)| eci.get(k).map(|&e| (v, e)))
                .unzip();
            correlate_pair(name, &x, &y)
        })
        .collect())
}

pub fn correlate(ctx: &Context, args: &CorrelateArgs) -> anyhow::Result<()> {
    let dir = &ctx.out_dir;
    let n_bins = ctx.settings.get("bins", args.bins, 10)?;
    let stored = load_scores(dir)?;
    let (_, inc) = artifacts::parse_incidence(open_stage(dir, artifacts::INCIDENCE, "complexity")?)?;
    let clustering = load_clustering(dir)?;
    let shops = load_shops(ctx)?;
    let s = &stored.scores;
    if s.clusters != inc.clusters || s.products != inc.products {
        return Err(InputError(format!(
            "{} and {}/{} disagree; rerun `urbcent complexity`",
            artifacts::INCIDENCE,
            artifacts::ECI,
            artifacts::PCI
        ))
        .into());
    }

    let eci: HashMap<usize, f64> = s.clusters.iter().copied().zip(s.eci.iter().copied()).collect();
    let diversity: HashMap<usize, f64> = s
        .clusters
        .iter()
        .copied()
        .zip(s.diversity.iter().map(|&d| d as f64))
        .collect();
    let eci_rows = cluster_characteristics(ctx, &eci, &clustering, &diversity)?;
    write_correlations(ctx, "correlations_eci.csv", "eci", &eci_rows)?;

    let ubiquity: Vec<f64> = s.ubiquity.iter().map(|&u| u as f64).collect();
    let pci_rows = [
        correlate_pair("uniqueness", &stored.uniqueness, &s.pci),
        correlate_pair("ubiquity", &ubiquity, &s.pci),
    ];
    write_correlations(ctx, "correlations_pci.csv", "pci", &pci_rows)?;

    // Share of each cluster's shops per industry, against tier membership.
    let industry_of: HashMap<&str, &str> = shops.iter().map(|sh| (sh.id.as_str(), sh.industry_code.as_str())).collect();
    let industries: BTreeSet<&str> = shops.iter().map(|sh| sh.industry_code.as_str()).collect();
    let members: HashMap<usize, &Vec<String>> = clustering.clusters.iter().map(|c| (c.cluster_id, &c.member_ids)).collect();
    let tier_names: BTreeSet<&str> = stored.tiers.iter().map(String::as_str).collect();
    let mut tier_rows = Vec::new();
    for ind in &industries {
        let share: Vec<f64> = s
            .clusters
            .iter()
            .map(|c| {
                let m = members.get(c).map_or(&[][..], |v| v.as_slice());
                let hits = m.iter().filter(|id| industry_of.get(id.as_str()) == Some(ind)).count();
                if m.is_empty() {
                    0.0
                } else {
                    hits as f64 / m.len() as f64
                }
            })
            .collect();
        for tier in &tier_names {
            let in_tier: Vec<bool> = stored.tiers.iter().map(|t| t == tier).collect();
            tier_rows.push((ind.to_string(), tier.to_string(), point_biserial(&in_tier, &share).ok()));
        }
    }
    write_file(dir, "tier_industry.csv", |w| {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["industry_code", "tier", "point_biserial"])?;
        for (ind, tier, r) in &tier_rows {
            out.write_record([ind.as_str(), tier, &r.map(|v| v.to_string()).unwrap_or_default()])?;
        }
        out.flush()?;
        Ok(())
    })?;

    let available = s.clusters.len().min(s.products.len());
    let n_bins = if n_bins > available {
        log::warn!("{n_bins} bins requested but only {available} available; using {available}");
        available
    } else {
        n_bins
    };
    let div: Vec<f64> = s.diversity.iter().map(|&d| d as f64).collect();
    let eci_pci = rank_contingency(&s.eci, &s.pci, &inc, n_bins, ("eci", "pci"))?;
    let div_uniq = rank_contingency(&div, &stored.uniqueness, &inc, n_bins, ("diversity", "uniqueness"))?;
    write_file(dir, "contingency_eci_pci.csv", |w| Ok(artifacts::write_contingency(w, &eci_pci)?))?;
    write_file(dir, "contingency_diversity_uniqueness.csv", |w| {
        Ok(artifacts::write_contingency(w, &div_uniq)?)
    })?;
    write_json(
        dir,
        "correlate_summary.json",
        &json!({
            "n_bins": n_bins,
            "monotonicity_eci_pci": num(eci_pci.monotonicity_score()),
            "monotonicity_diversity_uniqueness": num(div_uniq.monotonicity_score()),
        }),
    )?;
    for r in eci_rows.iter().chain(&pci_rows) {
        let show = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.3}"));
        println!("{:<20} n={:<6} pearson={} spearman={}", r.variable, r.n, show(r.pearson), show(r.spearman));
    }
    println!("contingency monotonicity (eci x pci): {:.3}", eci_pci.monotonicity_score());
    Ok(())
}
