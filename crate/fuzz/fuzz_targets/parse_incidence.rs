#![no_main]

use libfuzzer_sys::fuzz_target;
use urban_centrality::artifacts::parse_incidence;

fuzz_target!(|data: &[u8]| {
    let _ = parse_incidence(data);
});
