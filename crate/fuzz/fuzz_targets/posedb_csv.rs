#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::io::posedb::PoseDb;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(db) = PoseDb::from_csv(text) {
            assert_eq!(PoseDb::from_bin(&db.to_bin()).unwrap().len(), db.len());
        }
    }
});
