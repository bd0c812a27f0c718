//! End-to-end orchestration: generation, augmentation, evaluation, heatmap
//! conversion and dataset inspection.

mod augment;
mod baseline;
mod eval;
mod heatmap;
mod inspect;
mod synth;

pub use augment::{augment_dataset, AugmentConfig};
pub use baseline::{baseline_predictions, nearest_joint_baseline, nearest_joint_indices, predict_from_indices};
pub use eval::{
    cluster_sweep, evaluate, jitter_sweep, load_dataset_samples, sweep_csv, EvalOptions, EvalReport, SweepRow,
};
pub use heatmap::{decode_dump, encode_dataset, HeatmapEncodeConfig};
pub use inspect::{inspect, InspectReport};
pub use synth::{
    config_hash, forced_sample, synth, synth_with, Attempt, GenConfig, SampleOutcome, SynthContext, SynthReport,
};

use crate::body_model::Vec3;

pub(crate) fn to_vec3(p: &[f32; 3]) -> Vec3 {
    Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)
}

pub(crate) fn to_f32(p: &Vec3) -> [f32; 3] {
    [p.x as f32, p.y as f32, p.z as f32]
}
