#![no_main]

use libfuzzer_sys::fuzz_target;
use lhsynth::body_model::BodyModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = BodyModel::from_bytes(data) {
        assert_eq!(BodyModel::from_bytes(&model.to_bytes()).unwrap().num_vertices(), model.num_vertices());
    }
});
