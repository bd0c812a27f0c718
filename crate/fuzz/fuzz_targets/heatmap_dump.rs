#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::io::heatmap_dump::HeatmapDump;

fuzz_target!(|data: &[u8]| {
    if let Ok(dump) = HeatmapDump::from_bytes(data) {
        let _ = dump.to_bytes();
    }
});
