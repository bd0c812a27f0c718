#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::io::predictions::Predictions;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = Predictions::from_bytes(data) {
        assert_eq!(Predictions::from_bytes(&p.to_bytes()).unwrap(), p);
    }
});
