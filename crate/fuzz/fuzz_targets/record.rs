#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::io::record::{read_sample, SyntheticSample};

fuzz_target!(|data: &[u8]| {
    if let Ok((sample, used)) = read_sample(data, None) {
        assert!(used <= data.len());
        assert_eq!(sample.to_bytes().unwrap(), &data[..used]);
    }
    let _ = SyntheticSample::from_bytes(data);
});
