//! Replays the checked-in fuzz seeds; full-file seeds must parse cleanly.

use std::fs;
use std::path::PathBuf;

use urban_centrality::artifacts::{
    parse_assignments, parse_clusters, parse_incidence, parse_market_distances, parse_scores,
};
use urban_centrality::complexity::ComplexityMethod;
use urban_centrality::ingest::{parse_cards, parse_land_prices, parse_population, parse_shops};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

macro_rules! replay {
    ($name:ident, $target:literal, $parse:expr) => {
        #[test]
        fn $name() {
            for (file, data) in seeds($target) {
                let ok = $parse(&data[..]);
                if file == "seed_1" {
                    assert!(ok, "{} {file}", $target);
                }
            }
        }
    };
}

replay!(shops, "parse_shops", |d: &[u8]| parse_shops(d).is_ok());
replay!(population, "parse_population", |d: &[u8]| parse_population(d).is_ok());
replay!(cards, "parse_cards", |d: &[u8]| parse_cards(d).is_ok());
replay!(land_prices, "parse_land_prices", |d: &[u8]| parse_land_prices(d).is_ok());
replay!(clusters, "parse_clusters", |d: &[u8]| parse_clusters(d).is_ok());
replay!(assignments, "parse_assignments", |d: &[u8]| parse_assignments(d).is_ok());
replay!(incidence, "parse_incidence", |d: &[u8]| parse_incidence(d).is_ok());
replay!(market_distances, "parse_market_distances", |d: &[u8]| parse_market_distances(d).is_ok());
replay!(scores, "parse_scores", |d: &[u8]| {
    let mut parts = d.splitn(2, |&b| b == 0);
    let eci = parts.next().unwrap_or_default();
    let pci = parts.next().unwrap_or_default();
    parse_scores(eci, pci, ComplexityMethod::Reflections).is_ok()
});
