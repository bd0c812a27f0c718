use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::io::dataset::Dataset;
use crate::io::ply::export_ply;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectReport {
    pub count: usize,
    pub shards: usize,
    pub config_hash: String,
    pub master_seed: u64,
    pub points_min: usize,
    pub points_max: usize,
    pub points_mean: f64,
    /// Points per label over the whole dataset; the last label is background.
    pub label_counts: BTreeMap<u16, u64>,
    /// Fraction of samples in which each joint is visible.
    pub joint_visibility: Vec<f64>,
    pub mean_range_m: f64,
    pub mean_masked_patches: f64,
}

/// Verifies digests and decodes every record. With `ply_dir`, writes one PLY
/// per sample id in `export_ids` (all samples when empty).
pub fn inspect(dir: &Path, ply_dir: Option<&Path>, export_ids: &[u64]) -> Result<InspectReport> {
    let ds = Dataset::open(dir)?;
    ds.verify_files()?;
    let samples = ds.samples()?;
    let k = samples.first().map_or(0, |(_, s)| s.num_joints());
    let mut label_counts = BTreeMap::new();
    let mut visible = vec![0u64; k];
    let (mut pmin, mut pmax, mut psum) = (usize::MAX, 0usize, 0usize);
    let (mut rsum, mut msum) = (0.0, 0.0);
    for (id, s) in &samples {
        pmin = pmin.min(s.num_points());
        pmax = pmax.max(s.num_points());
        psum += s.num_points();
        rsum += s.meta.r as f64;
        msum += s.meta.mask_patch_count as f64;
        for l in &s.labels {
            *label_counts.entry(*l).or_insert(0) += 1;
        }
        for (v, f) in visible.iter_mut().zip(&s.visibility) {
            *v += *f as u64;
        }
        if let Some(out) = ply_dir {
            if export_ids.is_empty() || export_ids.contains(id) {
                std::fs::create_dir_all(out).map_err(|e| crate::Error::io(out, e))?;
                export_ply(s, &format!("sample {id}"), out.join(format!("sample-{id:08}.ply")))?;
            }
        }
    }
    let n = samples.len().max(1) as f64;
    Ok(InspectReport {
        count: samples.len(),
        shards: ds.manifest.files.len(),
        config_hash: ds.manifest.config_hash.clone(),
        master_seed: ds.manifest.master_seed,
        points_min: if samples.is_empty() { 0 } else { pmin },
        points_max: pmax,
        points_mean: psum as f64 / n,
        label_counts,
        joint_visibility: visible.iter().map(|v| *v as f64 / n).collect(),
        mean_range_m: rsum / n,
        mean_masked_patches: msum / n,
    })
}
