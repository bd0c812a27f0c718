//! Stability perturbations: clipped per-coordinate jitter and Gaussian noise
//! clusters.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::body_model::Vec3;
use crate::error::{Error, Result};
use crate::lidar::{HitCloud, NO_CELL, NO_FACE};
use crate::rng::Stream;
use crate::scene::GROUND_LABEL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterConfig {
    /// Standard deviation of the per-coordinate noise, metres.
    pub sigma: f64,
    /// Per-axis clamp on the noise, metres. May be infinite (`null` in JSON).
    #[serde(with = "unbounded")]
    pub clip: f64,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub cluster_sigma: f64,
    /// Expansion of the cloud's bounding box when placing cluster centres.
    pub placement_margin: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            n_clusters: 0,
            points_per_cluster: 0,
            cluster_sigma: 0.1,
            placement_margin: 0.3,
        }
    }
}

/// Default clip thresholds for jitter sweeps, metres.
pub fn default_clip_sweep() -> Vec<f64> {
    (1..=10).map(|k| k as f64 * 0.01).collect()
}

/// Default points-per-cluster values for cluster sweeps.
pub fn default_cluster_sweep() -> Vec<usize> {
    vec![10, 25, 50, 100, 150, 200]
}

/// Adds `clamp(N(0, sigma^2), -clip, clip)` to every coordinate.
pub fn jitter(points: &[Vec3], cfg: &JitterConfig, rng: &mut Stream) -> Result<Vec<Vec3>> {
    if !(cfg.sigma >= 0.0 && cfg.clip >= 0.0) || !cfg.sigma.is_finite() {
        return Err(Error::Input(format!("invalid jitter config {cfg:?}")));
    }
    if cfg.sigma == 0.0 || cfg.clip == 0.0 {
        return Ok(points.to_vec());
    }
    let normal = Normal::new(0.0, cfg.sigma).expect("finite sigma");
    Ok(points
        .iter()
        .map(|p| p.map(|x| x + normal.sample(rng).clamp(-cfg.clip, cfg.clip)))
        .collect())
}

/// Bounding box of `points` expanded by `margin`.
pub fn expanded_bounds(points: &[Vec3], margin: f64) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    let (lo, hi) = points.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
    let m = Vec3::repeat(margin);
    Some((lo - m, hi + m))
}

/// New noise points: cluster centres uniform in the expanded bounding box,
/// members Gaussian around their centre.
pub fn noise_cluster_points(points: &[Vec3], cfg: &ClusterConfig, rng: &mut Stream) -> Result<Vec<Vec3>> {
    let (lo, hi) = expanded_bounds(points, cfg.placement_margin)
        .ok_or_else(|| Error::Input("noise clusters need a non-empty cloud".into()))?;
    if !(cfg.cluster_sigma >= 0.0 && cfg.cluster_sigma.is_finite()) {
        return Err(Error::Input(format!("invalid cluster sigma {}", cfg.cluster_sigma)));
    }
    let normal = Normal::new(0.0, cfg.cluster_sigma).expect("finite sigma");
    let mut out = Vec::with_capacity(cfg.n_clusters * cfg.points_per_cluster);
    for _ in 0..cfg.n_clusters {
        let center = Vec3::from_fn(|k, _| {
            if hi[k] > lo[k] {
                rng.random_range(lo[k]..=hi[k])
            } else {
                lo[k]
            }
        });
        for _ in 0..cfg.points_per_cluster {
            out.push(center + Vec3::from_fn(|_, _| normal.sample(rng)));
        }
    }
    Ok(out)
}

/// Appends noise clusters labelled as background; originals are untouched.
pub fn add_noise_clusters(cloud: &HitCloud, cfg: &ClusterConfig, rng: &mut Stream) -> Result<HitCloud> {
    let added = noise_cluster_points(&cloud.points, cfg, rng)?;
    let mut out = cloud.clone();
    out.hit_face.extend(std::iter::repeat_n(NO_FACE, added.len()));
    out.ray_cell.extend(std::iter::repeat_n(NO_CELL, added.len()));
    out.labels.extend(std::iter::repeat_n(GROUND_LABEL, added.len()));
    out.points.extend(added);
    Ok(out)
}
