#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::io::dataset::Manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = Manifest::from_json(text) {
            assert_eq!(Manifest::from_json(&m.to_json().unwrap()).unwrap(), m);
        }
    }
});
