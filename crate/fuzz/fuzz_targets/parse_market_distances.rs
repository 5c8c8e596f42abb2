#![no_main]

use libfuzzer_sys::fuzz_target;
use urban_centrality::artifacts::parse_market_distances;

fuzz_target!(|data: &[u8]| {
    let _ = parse_market_distances(data);
});
