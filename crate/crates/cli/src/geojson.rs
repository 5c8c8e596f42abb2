//! GeoJSON export of clusters with their complexity scores.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};
use urban_centrality::artifacts::StoredScores;
use urban_centrality::cluster::AmenityCluster;

use crate::output::{num, write_file};
use crate::stages::{load_clustering, load_scores};
use crate::Context;

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Output file [default: <out-dir>/clusters.geojson]
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// One point feature per cluster, coordinates longitude first. Clusters
/// pruned before scoring get null scores.
pub fn feature_collection(clusters: &[AmenityCluster], stored: &StoredScores) -> Value {
    let s = &stored.scores;
    let pos: HashMap<usize, usize> = s.clusters.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let features: Vec<Value> = clusters
        .iter()
        .map(|c| {
            let i = pos.get(&c.cluster_id).copied();
            json!({
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [c.center.lon(), c.center.lat()],
                },
                "properties": {
                    "cluster_id": c.cluster_id,
                    "eci": i.map_or(Value::Null, |i| num(s.eci[i])),
                    "diversity": i.map(|i| s.diversity[i]),
                    "tier": i.map(|i| stored.tiers[i].clone()),
                    "n_shops": c.member_ids.len(),
                    "radius_m": num(c.radius_m),
                },
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

pub fn export(ctx: &Context, args: &ExportArgs) -> anyhow::Result<()> {
    let clustering = load_clustering(&ctx.out_dir)?;
    let stored = load_scores(&ctx.out_dir)?;
    let fc = feature_collection(&clustering.clusters, &stored);
    let target = args.output.clone().unwrap_or_else(|| ctx.out_dir.join("clusters.geojson"));
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    let name = target
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| crate::InputError(format!("invalid output path {}", target.display())))?;
    let path = write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, &fc)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    println!("features: {}", clustering.clusters.len());
    println!("wrote {}", path.display());
    Ok(())
}
