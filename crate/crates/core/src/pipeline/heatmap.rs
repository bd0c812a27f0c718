use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{to_f32, to_vec3};
use crate::body_model::Vec3;
use crate::error::{Error, Result};
use crate::heatmap::{decode_with, default_range, encode, DecodeMode, HeatmapSpec};
use crate::io::dataset::Dataset;
use crate::io::heatmap_dump::{HeatmapDump, HeatmapEntry};
use crate::io::predictions::Predictions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatmapEncodeConfig {
    pub bins: [usize; 3],
    pub sigma: f64,
    /// Fixed range for every sample; `None` centres a 3 m cube on the
    /// centroid of each sample's body points (all points if none).
    pub range: Option<[[f64; 2]; 3]>,
}

impl Default for HeatmapEncodeConfig {
    fn default() -> Self {
        let d = HeatmapSpec::default();
        Self {
            bins: d.bins,
            sigma: d.sigma,
            range: None,
        }
    }
}

/// Encodes the ground-truth joints of every sample.
pub fn encode_dataset(dir: &Path, cfg: &HeatmapEncodeConfig) -> Result<HeatmapDump> {
    let samples = Dataset::open(dir)?.samples()?;
    let k = samples.first().map_or(0, |(_, s)| s.num_joints());
    let centred = HeatmapSpec::default();
    let spec = HeatmapSpec {
        bins: cfg.bins,
        sigma: cfg.sigma,
        range: cfg.range.unwrap_or(centred.range),
    };
    spec.validate()?;
    let mut entries = Vec::with_capacity(samples.len());
    let mut clamped = 0usize;
    for (id, s) in &samples {
        let origin = match cfg.range {
            Some(_) => [0.0; 3],
            None => {
                let k = s.num_joints() as u16;
                let mut pts: Vec<Vec3> =
                    s.points.iter().zip(&s.labels).filter(|(_, l)| **l < k).map(|(p, _)| to_vec3(p)).collect();
                if pts.is_empty() {
                    pts = s.points.iter().map(to_vec3).collect();
                }
                let r = default_range(&pts).map_err(|e| Error::Input(format!("sample {id}: {e}")))?;
                std::array::from_fn(|c| 0.5 * (r[c][0] + r[c][1]))
            }
        };
        let entry_spec = spec.clone().with_range(std::array::from_fn(|c| spec.range[c].map(|x| x + origin[c])));
        let joints: Vec<Vec3> = s.joints.iter().map(to_vec3).collect();
        let enc = encode(&joints, &entry_spec)?;
        clamped += enc.clamped.iter().filter(|c| **c).count();
        entries.push(HeatmapEntry {
            id: *id,
            origin,
            heatmaps: enc.heatmaps,
        });
    }
    if clamped > 0 {
        log::warn!("{clamped} joints fell outside the heatmap range and were clamped");
    }
    Ok(HeatmapDump {
        spec,
        num_joints: k,
        entries,
    })
}

/// Decodes every entry of a dump into joint predictions.
pub fn decode_dump(dump: &HeatmapDump, mode: DecodeMode) -> Result<Predictions> {
    let mut preds = Predictions::new(dump.num_joints);
    for e in &dump.entries {
        let joints = decode_with(&e.heatmaps, &dump.entry_spec(e), mode)
            .map_err(|err| Error::Input(format!("sample {}: {err}", e.id)))?;
        preds.insert(e.id, joints.iter().map(to_f32).collect())?;
    }
    Ok(preds)
}
