#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::io::posedb::PoseDb;

fuzz_target!(|data: &[u8]| {
    if let Ok(db) = PoseDb::from_bin(data) {
        assert_eq!(db.to_bin(), data);
    }
});
