//! The synth stage: a synthetic city written in the ingest formats, plus
//! its ground truth.

use std::io::Write;

use clap::Args;
use serde_json::json;
use urban_centrality::geo::GeoPoint;
use urban_centrality::ingest;
use urban_centrality::synth::{
    card_records, generate_blobs, generate_christaller, generate_consumers, generate_land_prices,
    generate_population, BlobConfig, ChristallerConfig, SyntheticCity,
};

use crate::output::write_file;
use crate::output::write_json;
use crate::{Context, InputError};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// City layout [default: christaller]
    #[arg(long, value_parser = ["christaller", "blobs"])]
    pub kind: Option<String>,
    /// Hierarchy levels, 1 to 6 [default: 4]
    #[arg(long)]
    pub levels: Option<usize>,
    /// Spacing ratio squared between levels: 3, 4 or 7 [default: 3]
    #[arg(long)]
    pub k_factor: Option<u32>,
    /// Lowest-level market spacing, km [default: 1]
    #[arg(long)]
    pub base_spacing_km: Option<f64>,
    /// Mean shops per center per product [default: 10]
    #[arg(long)]
    pub shops_per_center: Option<u32>,
    /// Positional noise radius, meters [default: 50]
    #[arg(long)]
    pub jitter_m: Option<f64>,
    /// City radius, km [default: three top-level spacings]
    #[arg(long)]
    pub radius_km: Option<f64>,
    /// Consumer groups per center and product [default: 2]
    #[arg(long)]
    pub groups_per_center: Option<usize>,
    /// Consumer range by product level: (level+1) km or a constant 1 km
    /// [default: increasing]
    #[arg(long, value_parser = ["increasing", "constant"])]
    pub range_profile: Option<String>,
    /// Blob count [default: 3]
    #[arg(long)]
    pub n_blobs: Option<usize>,
    /// Shops per blob [default: 60]
    #[arg(long)]
    pub shops_per_blob: Option<usize>,
    /// Blob standard deviation, meters [default: 100]
    #[arg(long)]
    pub sigma_m: Option<f64>,
    /// Distance between blob centers, km [default: 2]
    #[arg(long)]
    pub spacing_km: Option<f64>,
    /// Products per blob [default: 2]
    #[arg(long)]
    pub products_per_blob: Option<usize>,
}

fn build_city(ctx: &Context, args: &SynthArgs, seed: u64) -> anyhow::Result<SyntheticCity> {
    let s = &ctx.settings;
    let kind = s.get("kind", args.kind.clone(), "christaller".to_string())?;
    let origin = GeoPoint::new(37.5665, 126.978)?;
    let city = match kind.as_str() {
        "christaller" => {
            let d = ChristallerConfig::default();
            generate_christaller(&ChristallerConfig {
                levels: s.get("levels", args.levels, d.levels)?,
                k_factor: s.get("k_factor", args.k_factor, d.k_factor)?,
                base_spacing_km: s.get("base_spacing_km", args.base_spacing_km, d.base_spacing_km)?,
                shops_per_center_per_product: s.get(
                    "shops_per_center",
                    args.shops_per_center,
                    d.shops_per_center_per_product,
                )?,
                jitter_m: s.get("jitter_m", args.jitter_m, d.jitter_m)?,
                radius_km: s.opt("radius_km", args.radius_km)?,
                seed,
                origin,
                ..d
            })?
        }
        "blobs" => generate_blobs(&BlobConfig {
            n_blobs: s.get("n_blobs", args.n_blobs, 3)?,
            shops_per_blob: s.get("shops_per_blob", args.shops_per_blob, 60)?,
            sigma_m: s.get("sigma_m", args.sigma_m, 100.0)?,
            spacing_km: s.get("spacing_km", args.spacing_km, 2.0)?,
            products_per_blob: s.get("products_per_blob", args.products_per_blob, 2)?,
            seed,
            origin,
        })?,
        other => return Err(InputError(format!("unknown synthetic city kind `{other}`")).into()),
    };
    Ok(city)
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> anyhow::Result<()> {
    let s = &ctx.settings;
    let seed = ctx.seed()?;
    let city = build_city(ctx, args, seed)?;
    let groups_per_center = s.get("groups_per_center", args.groups_per_center, 2)?;
    let profile = s.get("range_profile", args.range_profile.clone(), "increasing".to_string())?;
    let increasing = match profile.as_str() {
        "increasing" => true,
        "constant" => false,
        other => return Err(InputError(format!("unknown range profile `{other}`")).into()),
    };
    let range = move |level: usize| if increasing { level as f64 + 1.0 } else { 1.0 };
    let groups = generate_consumers(&city, groups_per_center, range, seed.wrapping_add(1));
    let cards = card_records(groups, seed.wrapping_add(2));
    let population = generate_population(&city, seed.wrapping_add(3));
    let prices = generate_land_prices(&city, seed.wrapping_add(4));

    let dir = &ctx.out_dir;
    write_file(dir, "shops.csv", |w| Ok(ingest::write_shops(w, &city.shops)?))?;
    write_file(dir, "card.csv", |w| Ok(ingest::write_cards(w, &cards)?))?;
    write_file(dir, "population.csv", |w| Ok(ingest::write_population(w, &population)?))?;
    write_file(dir, "land_price.csv", |w| Ok(ingest::write_land_prices(w, &prices)?))?;
    write_file(dir, "truth_products.csv", |w| {
        writeln!(w, "product_code,level")?;
        for (p, l) in &city.product_levels {
            writeln!(w, "{p},{l}")?;
        }
        Ok(())
    })?;
    write_file(dir, "truth_centers.csv", |w| {
        writeln!(w, "center,lat,lon,level")?;
        for (i, c) in city.centers.iter().enumerate() {
            writeln!(w, "{i},{},{},{}", c.location.lat(), c.location.lon(), c.level)?;
        }
        Ok(())
    })?;
    write_file(dir, "truth_shops.csv", |w| {
        writeln!(w, "shop_id,center")?;
        for (shop, c) in city.shops.iter().zip(&city.shop_center) {
            writeln!(w, "{},{c}", shop.id)?;
        }
        Ok(())
    })?;
    write_json(
        dir,
        "synth_summary.json",
        &json!({
            "seed": seed,
            "n_shops": city.shops.len(),
            "n_centers": city.centers.len(),
            "n_products": city.product_levels.len(),
            "n_consumer_groups": cards.len(),
            "n_population_cells": population.len(),
            "n_land_prices": prices.len(),
            "range_profile": profile,
        }),
    )?;
    println!("shops: {}", city.shops.len());
    println!("centers: {}", city.centers.len());
    println!("products: {}", city.product_levels.len());
    println!("consumer groups: {}", cards.len());
    Ok(())
}
