use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{to_f32, to_vec3};
use crate::augment::{jitter, noise_cluster_points, ClusterConfig, JitterConfig};
use crate::body_model::Vec3;
use crate::error::Result;
use crate::io::dataset::{Dataset, DatasetWriter, Manifest, MAX_SHARD_RECORDS};
use crate::io::record::read_sample;
use crate::rng::{stream, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub jitter: JitterConfig,
    pub clusters: ClusterConfig,
    /// Stream seed; `None` reuses the source dataset's master seed.
    pub seed: Option<u64>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            jitter: JitterConfig { sigma: 0.0, clip: f64::INFINITY },
            clusters: ClusterConfig::default(),
            seed: None,
        }
    }
}

impl AugmentConfig {
    fn is_identity(&self) -> bool {
        (self.jitter.sigma == 0.0 || self.jitter.clip == 0.0)
            && (self.clusters.n_clusters == 0 || self.clusters.points_per_cluster == 0)
    }
}

/// Writes a perturbed copy of the dataset in `src` to `dst`. Records keep
/// their ids and config hash; the step is appended to the provenance.
pub fn augment_dataset(src: &Path, dst: &Path, cfg: &AugmentConfig) -> Result<Manifest> {
    let ds = Dataset::open(src)?;
    let hash = ds.manifest.hash_bytes();
    let seed = cfg.seed.unwrap_or(ds.manifest.master_seed);
    let shard_size = shard_size_of(&ds.manifest);
    let mut writer = DatasetWriter::create(dst, hash, shard_size)?;
    for (id, bytes) in ds.raw_records()? {
        if cfg.is_identity() {
            read_sample(&bytes, Some(&hash))?;
            writer.push_encoded(id, &bytes)?;
            continue;
        }
        let (mut s, _) = read_sample(&bytes, Some(&hash))?;
        let pts: Vec<Vec3> = s.points.iter().map(to_vec3).collect();
        let jittered = jitter(&pts, &cfg.jitter, &mut stream(seed, id, Stage::Jitter, 0))?;
        s.points = jittered.iter().map(to_f32).collect();
        if cfg.clusters.n_clusters > 0 && cfg.clusters.points_per_cluster > 0 && !pts.is_empty() {
            let added = noise_cluster_points(&jittered, &cfg.clusters, &mut stream(seed, id, Stage::Clusters, 0))?;
            let background = s.num_joints() as u16;
            s.labels.extend(std::iter::repeat_n(background, added.len()));
            s.points.extend(added.iter().map(to_f32));
        }
        writer.push(id, &s)?;
    }
    let mut provenance = ds.manifest.provenance.clone();
    provenance.push(serde_json::json!({
        "step": "augment",
        "seed": seed,
        "config": serde_json::to_value(cfg)?,
    }));
    writer.finish(ds.manifest.master_seed, ds.manifest.config.clone(), provenance)
}

/// Records per shard in the source, so identity augmentation reproduces
/// shard boundaries.
fn shard_size_of(m: &Manifest) -> usize {
    let first = m.records.first().map(|r| r.file.as_str());
    let n = m.records.iter().take_while(|r| Some(r.file.as_str()) == first).count();
    if m.files.len() > 1 {
        n.clamp(1, MAX_SHARD_RECORDS)
    } else {
        MAX_SHARD_RECORDS
    }
}
