#![no_main]

use libfuzzer_sys::fuzz_target;
use urban_centrality::ingest::parse_shops;

fuzz_target!(|data: &[u8]| {
    let _ = parse_shops(data);
});
