//! The cluster, complexity and market stages.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context as _;
use clap::Args;
use log::{info, warn};
use serde_json::json;
use urban_centrality::artifacts::{self, StoredScores};
use urban_centrality::cluster::{detect_clusters, Clustering, DecayParams, DistanceMode, GrowParams, Shop};
use urban_centrality::complexity::{
    build_counts, compute_complexity, compute_rca, uniqueness, ComplexityMethod, ComplexityScores, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use urban_centrality::econometrics::{eci_tiers, spearman, tier_label};
use urban_centrality::ingest::{self, CardRecord};
use urban_centrality::market::{collapse_per_product, market_sets, min_market_distances, spacing_from_records, travel_distances};

use crate::output::{num, open_input, open_stage, write_file, write_json};
use crate::{Context, InputError};

pub const COMPLEXITY_SUMMARY: &str = "complexity_summary.json";

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Distance decay per km in the effective count [default: 7.58]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Radius a peak must dominate, meters [default: 300]
    #[arg(long)]
    pub peak_radius_m: Option<f64>,
    /// Minimum effective count for a peak [default: 0]
    #[arg(long)]
    pub min_peak_density: Option<f64>,
    /// Maximum shop-to-peak distance, meters [default: 1000]
    #[arg(long)]
    pub cutoff_m: Option<f64>,
    /// Smaller clusters are dissolved [default: 5]
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    /// Solver [default: reflections]
    #[arg(long, value_parser = ["reflections", "eigen"])]
    pub method: Option<String>,
    /// Number of ECI tiers [default: 3]
    #[arg(long)]
    pub tiers: Option<usize>,
    /// Iteration cap for the method of reflections [default: 1000]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Convergence tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MarketArgs {
    /// Keep only each product's closest market pair
    #[arg(long)]
    pub per_product: bool,
}

/// Reads the shops file, writing any rejected rows next to the outputs.
pub fn load_shops(ctx: &Context) -> anyhow::Result<Vec<Shop>> {
    let path = ctx.input("shops")?;
    let parsed = ingest::parse_shops(open_input(&path)?).with_context(|| format!("reading {}", path.display()))?;
    report_rejects(ctx, "shops", &parsed.rejects)?;
    Ok(parsed.records)
}

pub fn load_cards(ctx: &Context, path: &Path) -> anyhow::Result<Vec<CardRecord>> {
    let parsed = ingest::parse_cards(open_input(path)?).with_context(|| format!("reading {}", path.display()))?;
    report_rejects(ctx, "cards", &parsed.rejects)?;
    Ok(parsed.records)
}

pub fn report_rejects(ctx: &Context, what: &str, rejects: &[ingest::Reject]) -> anyhow::Result<()> {
    if rejects.is_empty() {
        return Ok(());
    }
    warn!("{} {what} rows rejected; see rejects_{what}.csv", rejects.len());
    write_file(&ctx.out_dir, &format!("rejects_{what}.csv"), |w| {
        Ok(ingest::write_rejects(w, rejects)?)
    })?;
    Ok(())
}

pub fn load_clustering(dir: &Path) -> anyhow::Result<Clustering> {
    let clusters = open_stage(dir, artifacts::CLUSTERS, "cluster")?;
    let assignments = open_stage(dir, artifacts::ASSIGNMENTS, "cluster")?;
    Ok(artifacts::read_clustering(clusters, assignments)?)
}

pub fn load_scores(dir: &Path) -> anyhow::Result<StoredScores> {
    let eci = open_stage(dir, artifacts::ECI, "complexity")?;
    let pci = open_stage(dir, artifacts::PCI, "complexity")?;
    let method = std::fs::read_to_string(dir.join(COMPLEXITY_SUMMARY))
        .ok()
        .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
        .and_then(|v| v["method"].as_str().and_then(|m| m.parse().ok()))
        .unwrap_or(ComplexityMethod::Reflections);
    Ok(artifacts::parse_scores(eci, pci, method)?)
}

pub fn cluster(ctx: &Context, args: &ClusterArgs) -> anyhow::Result<()> {
    let s = &ctx.settings;
    let defaults = DecayParams::default();
    let decay = DecayParams {
        gamma: s.get("gamma", args.gamma, defaults.gamma)?,
        peak_radius_m: s.get("peak_radius_m", args.peak_radius_m, defaults.peak_radius_m)?,
        min_peak_density: s.get("min_peak_density", args.min_peak_density, defaults.min_peak_density)?,
    };
    let grow_defaults = GrowParams::default();
    let grow = GrowParams {
        cutoff_m: s.get("cutoff_m", args.cutoff_m, grow_defaults.cutoff_m)?,
        min_cluster_size: s.get("min_cluster_size", args.min_cluster_size, grow_defaults.min_cluster_size)?,
    };
    let mode = if ctx.exact()? {
        DistanceMode::Exact
    } else {
        DistanceMode::Approximate
    };
    let shops = load_shops(ctx)?;
    let clustering = detect_clusters(&shops, &decay, &grow, mode)?;

    write_file(&ctx.out_dir, artifacts::CLUSTERS, |w| {
        Ok(artifacts::write_clusters(w, &clustering.clusters)?)
    })?;
    write_file(&ctx.out_dir, artifacts::ASSIGNMENTS, |w| {
        Ok(artifacts::write_assignments(w, &shops, &clustering)?)
    })?;
    let mean_radius = clustering.mean_radius_m();
    write_json(
        &ctx.out_dir,
        "cluster_summary.json",
        &json!({
            "n_shops": shops.len(),
            "n_clusters": clustering.clusters.len(),
            "n_assigned": clustering.n_assigned(),
            "n_unassigned": clustering.unassigned.len(),
            "mean_radius_m": num(mean_radius),
            "gamma": decay.gamma,
            "peak_radius_m": decay.peak_radius_m,
            "cutoff_m": grow.cutoff_m,
            "min_cluster_size": grow.min_cluster_size,
            "exact_distances": mode == DistanceMode::Exact,
        }),
    )?;
    println!("shops: {}", shops.len());
    println!("clusters: {}", clustering.clusters.len());
    println!("assigned shops: {}", clustering.n_assigned());
    println!("unassigned shops: {}", clustering.unassigned.len());
    if mean_radius.is_finite() {
        println!("mean radius: {mean_radius:.1} m");
    }
    Ok(())
}

/// Spearman agreement of two score vectors; `None` if undefined.
fn agreement(a: &[f64], b: &[f64]) -> Option<f64> {
    spearman(a, b).ok()
}

pub fn complexity(ctx: &Context, args: &ComplexityArgs) -> anyhow::Result<()> {
    let s = &ctx.settings;
    let method: ComplexityMethod = s
        .get("method", args.method.clone(), "reflections".to_string())?
        .parse()
        .map_err(|e: urban_centrality::Error| InputError(e.to_string()))?;
    let n_tiers = s.get("tiers", args.tiers, 3)?;
    let max_iter = s.get("max_iter", args.max_iter, DEFAULT_MAX_ITER)?;
    let tol = s.get("tol", args.tol, DEFAULT_TOL)?;

    let shops = load_shops(ctx)?;
    let clustering = load_clustering(&ctx.out_dir)?;
    let (counts, pruned) = build_counts(&shops, &clustering.clusters)?;
    if !pruned.is_empty() {
        info!(
            "pruned {} empty clusters and {} empty products",
            pruned.dropped_clusters.len(),
            pruned.dropped_products.len()
        );
    }
    let inc = compute_rca(&counts)?;
    let scores = compute_complexity(&inc, method, max_iter, tol)?;
    let other_method = match method {
        ComplexityMethod::Reflections => ComplexityMethod::Eigen,
        ComplexityMethod::Eigen => ComplexityMethod::Reflections,
    };
    let other: Option<ComplexityScores> = match compute_complexity(&inc, other_method, max_iter, tol) {
        Ok(o) => Some(o),
        Err(e) => {
            warn!("{other_method} comparison unavailable: {e}");
            None
        }
    };
    let eci_agreement = other.as_ref().and_then(|o| agreement(&scores.eci, &o.eci));
    let pci_agreement = other.as_ref().and_then(|o| agreement(&scores.pci, &o.pci));

    let tiers: Vec<String> = eci_tiers(&scores.eci, &scores.clusters, n_tiers)?
        .into_iter()
        .map(|t| tier_label(t, n_tiers))
        .collect();
    let uniq = uniqueness(&inc);

    write_file(&ctx.out_dir, artifacts::INCIDENCE, |w| {
        Ok(artifacts::write_incidence(w, &counts, &inc)?)
    })?;
    write_file(&ctx.out_dir, artifacts::ECI, |w| Ok(artifacts::write_eci(w, &scores, &tiers)?))?;
    write_file(&ctx.out_dir, artifacts::PCI, |w| Ok(artifacts::write_pci(w, &scores, &uniq)?))?;
    let opt = |v: Option<f64>| v.map_or(serde_json::Value::Null, num);
    write_json(
        &ctx.out_dir,
        COMPLEXITY_SUMMARY,
        &json!({
            "method": method.to_string(),
            "iterations": scores.iterations,
            "n_clusters": scores.clusters.len(),
            "n_products": scores.products.len(),
            "pruned_clusters": pruned.dropped_clusters,
            "pruned_products": pruned.dropped_products,
            "n_tiers": n_tiers,
            "comparison_method": other_method.to_string(),
            "spearman_eci_between_methods": opt(eci_agreement),
            "spearman_pci_between_methods": opt(pci_agreement),
        }),
    )?;
    println!("method: {method} ({} iterations)", scores.iterations);
    println!("clusters: {}", scores.clusters.len());
    println!("products: {}", scores.products.len());
    match eci_agreement {
        Some(r) => println!("ECI rank agreement with {other_method}: {r:.6}"),
        None => println!("ECI rank agreement with {other_method}: unavailable"),
    }
    if let Some(r) = pci_agreement {
        println!("PCI rank agreement with {other_method}: {r:.6}");
    }
    Ok(())
}

pub fn market(ctx: &Context, args: &MarketArgs) -> anyhow::Result<()> {
    let per_product = ctx.settings.switch("per_product", args.per_product)?;
    let (_, inc) = artifacts::parse_incidence(open_stage(&ctx.out_dir, artifacts::INCIDENCE, "complexity")?)?;
    let clustering = load_clustering(&ctx.out_dir)?;
    let sets = market_sets(&inc);
    let distances = min_market_distances(&sets, &clustering.clusters);
    if !distances.unknown_clusters.is_empty() {
        return Err(InputError(format!(
            "incidence references clusters missing from {}: {:?}",
            artifacts::CLUSTERS,
            distances.unknown_clusters
        ))
        .into());
    }
    let spacing = spacing_from_records(&distances.records);
    let n_markets: BTreeMap<String, usize> = sets
        .iter()
        .map(|s| (s.product_code.clone(), s.market_cluster_ids.len()))
        .collect();
    let records = if per_product {
        collapse_per_product(&distances.records)
    } else {
        distances.records.clone()
    };
    write_file(&ctx.out_dir, artifacts::MARKET_DISTANCES, |w| {
        Ok(artifacts::write_market_distances(w, &records)?)
    })?;
    write_file(&ctx.out_dir, artifacts::MARKET_SPACING, |w| {
        Ok(artifacts::write_market_spacing(w, &spacing, &n_markets)?)
    })?;

    let mut n_groups = None;
    if let Some(path) = ctx.optional_input("cards")? {
        let cards = load_cards(ctx, &path)?;
        let groups: Vec<_> = cards.into_iter().map(|c| c.group).collect();
        let d = travel_distances(&groups);
        let products: Vec<&str> = groups.iter().map(|g| g.product_code.as_str()).collect();
        write_file(&ctx.out_dir, artifacts::TRAVEL_DISTANCES, |w| {
            Ok(artifacts::write_travel_distances(w, &products, &d)?)
        })?;
        n_groups = Some(groups.len());
    }
    write_json(
        &ctx.out_dir,
        "market_summary.json",
        &json!({
            "per_product": per_product,
            "n_records": records.len(),
            "n_products_with_markets": sets.len(),
            "single_market_products": distances.skipped,
            "n_consumer_groups": n_groups,
        }),
    )?;
    println!("market distance rows: {}", records.len());
    println!("products with 2+ markets: {}", spacing.len());
    if !distances.skipped.is_empty() {
        println!("single-market products: {}", distances.skipped.len());
    }
    if let Some(n) = n_groups {
        println!("consumer groups: {n}");
    }
    Ok(())
}
