#![no_main]

use libfuzzer_sys::fuzz_target;
use urban_centrality::artifacts::parse_scores;
use urban_centrality::complexity::ComplexityMethod;

// The input holds both files separated by a NUL byte.
fuzz_target!(|data: &[u8]| {
    let mut parts = data.splitn(2, |&b| b == 0);
    let eci = parts.next().unwrap_or_default();
    let pci = parts.next().unwrap_or_default();
    let _ = parse_scores(eci, pci, ComplexityMethod::Reflections);
});
