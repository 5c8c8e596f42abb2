mod common;

use std::collections::BTreeSet;

use common::{brute_effective_counts, origin, random_shops, shop};
use proptest::prelude::*;
use urban_centrality::cluster::{
    detect_clusters, effective_counts, DecayParams, DistanceMode, GrowParams, APPROX_TERM_TOLERANCE,
};
use urban_centrality::geo::geodesic_distance;
use urban_centrality::synth::{generate_blobs, BlobConfig};

fn blobs(seed: u64) -> urban_centrality::synth::SyntheticCity {
    generate_blobs(&BlobConfig {
        n_blobs: 3,
        shops_per_blob: 80,
        sigma_m: 100.0,
        spacing_km: 2.0,
        products_per_blob: 2,
        seed,
        origin: origin(),
    })
    .unwrap()
}

#[test]
fn exact_mode_matches_double_loop() {
    let shops = random_shops(400, 3.0, 11);
    let d = DecayParams::default();
    let got = effective_counts(&shops, &d, DistanceMode::Exact).unwrap();
    let want = brute_effective_counts(&shops, d.gamma);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() / w < 1e-9, "{g} vs {w}");
    }
}

#[test]
fn approximate_mode_within_bound() {
    let shops = random_shops(400, 3.0, 12);
    let d = DecayParams::default();
    let got = effective_counts(&shops, &d, DistanceMode::Approximate).unwrap();
    let want = brute_effective_counts(&shops, d.gamma);
    let bound = APPROX_TERM_TOLERANCE * shops.len() as f64;
    for (g, w) in got.iter().zip(&want) {
        assert!(g <= &(w + 1e-9) && w - g < bound, "{g} vs {w}");
    }
}

#[test]
fn three_blobs_give_three_clusters() {
    for seed in 1..=5 {
        let city = blobs(seed);
        let c = detect_clusters(
            &city.shops,
            &DecayParams::default(),
            &GrowParams::default(),
            DistanceMode::Exact,
        )
        .unwrap();
        assert_eq!(c.clusters.len(), 3, "seed {seed}");
        for cl in &c.clusters {
            let nearest = city
                .centers
                .iter()
                .map(|b| geodesic_distance(b.location, cl.center))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.3, "seed {seed}: peak {nearest} km from its blob");
        }
    }
}

#[test]
fn empty_input_is_an_error() {
    let r = detect_clusters(&[], &DecayParams::default(), &GrowParams::default(), DistanceMode::Exact);
    assert!(r.is_err());
}

#[test]
fn isolated_shops_stay_unassigned() {
    let o = origin();
    let mut shops: Vec<_> = (0..6)
        .map(|i| shop(&format!("a{i}"), o.offset(i as f64 * 10.0, 0.0), "P", "I"))
        .collect();
    shops.push(shop("far", o.offset(5000.0, 0.0), "P", "I"));
    let c = detect_clusters(&shops, &DecayParams::default(), &GrowParams::default(), DistanceMode::Exact).unwrap();
    assert_eq!(c.clusters.len(), 1);
    assert_eq!(c.unassigned, vec!["far".to_string()]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partition_and_permutation(seed in 0u64..1000, n in 5usize..150, rot in 0usize..150) {
        let shops = random_shops(n, 2.0, seed);
        let grow = GrowParams { min_cluster_size: 2, ..Default::default() };
        let c = detect_clusters(&shops, &DecayParams::default(), &grow, DistanceMode::Approximate).unwrap();
        let mut seen = BTreeSet::new();
        for cl in &c.clusters {
            prop_assert!(!cl.member_ids.is_empty());
            prop_assert!(cl.radius_m >= 0.0);
            for id in &cl.member_ids {
                prop_assert!(seen.insert(id.clone()), "{} in two clusters", id);
            }
        }
        prop_assert_eq!(c.n_assigned() + c.unassigned.len(), n);

        let mut shuffled = shops.clone();
        shuffled.rotate_left(rot % n);
        shuffled.reverse();
        let d = detect_clusters(&shuffled, &DecayParams::default(), &grow, DistanceMode::Approximate).unwrap();
        prop_assert_eq!(c, d);
    }

    #[test]
    fn larger_gamma_never_increases_counts(seed in 0u64..1000, g in 1.0f64..20.0, extra in 0.0f64..10.0) {
        let shops = random_shops(60, 2.0, seed);
        let lo = DecayParams { gamma: g, ..Default::default() };
        let hi = DecayParams { gamma: g + extra, ..Default::default() };
        let a = effective_counts(&shops, &lo, DistanceMode::Exact).unwrap();
        let b = effective_counts(&shops, &hi, DistanceMode::Exact).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y <= x);
            prop_assert!(*y >= 1.0);
        }
    }
}
