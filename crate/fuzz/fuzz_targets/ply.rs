#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::io::ply::{parse_ply, sample_from_ply};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_ply(text);
        let _ = sample_from_ply(text);
    }
});
