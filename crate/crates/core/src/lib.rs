//! Synthetic LiDAR scans of posed humans with per-point joint labels, plus
//! the augmentation, heatmap, loss and metric tooling that goes with them.

pub mod augment;
pub mod body_model;
pub mod error;
pub mod heatmap;
pub mod io;
pub mod lidar;
pub mod losses;
pub mod masking;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod scene;

pub use error::{Error, ErrorKind, Result};
