#![no_main]

use libfuzzer_sys::fuzz_target;
use urban_centrality::ingest::parse_cards;

fuzz_target!(|data: &[u8]| {
    let _ = parse_cards(data);
});
