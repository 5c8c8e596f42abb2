#![no_main]

use libfuzzer_sys::fuzz_target;
use urban_centrality::artifacts::parse_clusters;

fuzz_target!(|data: &[u8]| {
    let _ = parse_clusters(data);
});
