//! On-disk formats: sample records, sharded datasets, predictions, heatmap
//! dumps, pose databases and PLY exports.

pub(crate) mod bytes;
pub mod dataset;
pub mod heatmap_dump;
pub mod ply;
pub mod posedb;
pub mod predictions;
pub mod record;

pub use dataset::{Dataset, DatasetWriter, Manifest};
pub use heatmap_dump::{read_heatmap_dump, write_heatmap_dump, HeatmapDump, HeatmapEntry};
pub use ply::{export_ply, parse_ply, sample_from_ply, sample_to_ply};
pub use posedb::{load_pose_db, save_pose_db, PoseDb};
pub use predictions::{read_predictions, write_predictions, Predictions};
pub use record::{read_sample, SampleMeta, SyntheticSample};
