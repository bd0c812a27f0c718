use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::baseline::{nearest_joint_indices, predict_from_indices};
use super::{nearest_joint_baseline, to_f32, to_vec3};
use crate::augment::{jitter, noise_cluster_points, ClusterConfig, JitterConfig};
use crate::body_model::Vec3;
use crate::error::{Error, Result};
use crate::io::dataset::Dataset;
use crate::io::predictions::Predictions;
use crate::io::record::SyntheticSample;
use crate::metrics::{aggregate, evaluate_instance, worst_instances, AlignMode, MetricsReport, SkeletonSpec, WorstStats, DEFAULT_WORST_N};
use crate::rng::{stream, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub skeleton: SkeletonSpec,
    pub align: AlignMode,
    pub worst_n: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            skeleton: SkeletonSpec::default(),
            align: AlignMode::Similarity,
            worst_n: DEFAULT_WORST_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: MetricsReport,
    pub worst: WorstStats,
    /// Dataset samples without a prediction.
    pub missing_ids: Vec<u64>,
    /// Samples skipped because no joint was visible.
    pub skipped_ids: Vec<u64>,
}

pub fn load_dataset_samples(dir: &Path) -> Result<Vec<(u64, SyntheticSample)>> {
    Dataset::open(dir)?.samples()
}

/// Metrics of `preds` against the ground truth of `samples`.
pub fn evaluate(samples: &[(u64, SyntheticSample)], preds: &Predictions, opts: &EvalOptions) -> Result<EvalReport> {
    let (reports, missing_ids, skipped_ids) = instance_reports(samples, preds, opts)?;
    Ok(EvalReport {
        metrics: aggregate(&reports)?,
        worst: worst_instances(&reports, opts.worst_n)?,
        missing_ids,
        skipped_ids,
    })
}

type InstanceReports = (Vec<MetricsReport>, Vec<u64>, Vec<u64>);

/// Per-instance reports, missing ids and skipped ids.
fn instance_reports(samples: &[(u64, SyntheticSample)], preds: &Predictions, opts: &EvalOptions) -> Result<InstanceReports> {
    opts.skeleton.validate()?;
    let ids: Vec<u64> = samples.iter().map(|(id, _)| *id).collect();
    let (_, missing_ids) = preds.intersect(&ids)?;
    let mut reports = Vec::with_capacity(samples.len());
    let mut skipped_ids = Vec::new();
    for (id, s) in samples {
        let Some(pred) = preds.joints.get(id) else { continue };
        if pred.len() != s.num_joints() {
            return Err(Error::Dimension(format!(
                "sample {id}: {} predicted joints, {} in ground truth",
                pred.len(),
                s.num_joints()
            )));
        }
        let visible = s.visible();
        if !visible.iter().any(|v| *v) {
            skipped_ids.push(*id);
            continue;
        }
        let p: Vec<Vec3> = pred.iter().map(to_vec3).collect();
        let g: Vec<Vec3> = s.joints.iter().map(to_vec3).collect();
        let r = evaluate_instance(&p, &g, &visible, &opts.skeleton, opts.align)
            .map_err(|e| Error::Input(format!("sample {id}: {e}")))?;
        reports.push(r);
    }
    if !skipped_ids.is_empty() {
        log::warn!("{} samples have no visible joints and were skipped", skipped_ids.len());
    }
    Ok((reports, missing_ids, skipped_ids))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub mpjpe_mm: f64,
    pub pa_mpjpe_mm: Option<f64>,
    pub pck3: f64,
    pub pck5: f64,
}

fn sweep_row(parameter: f64, m: &MetricsReport) -> SweepRow {
    SweepRow {
        parameter,
        mpjpe_mm: m.mpjpe_mm,
        pa_mpjpe_mm: m.pa_mpjpe_mm,
        pck3: m.pck3,
        pck5: m.pck5,
    }
}

fn metrics_of(samples: &[(u64, SyntheticSample)], preds: &Predictions, opts: &EvalOptions) -> Result<MetricsReport> {
    aggregate(&instance_reports(samples, preds, opts)?.0)
}

/// Metrics of the nearest-joint baseline frozen on the clean cloud: the point
/// assignment is computed once, and each clip level reports the jittered
/// positions of the assigned points. Every level reuses the same noise
/// draws, so levels differ only in the clamp.
pub fn jitter_sweep(
    samples: &[(u64, SyntheticSample)],
    sigma: f64,
    clips: &[f64],
    seed: u64,
    opts: &EvalOptions,
) -> Result<Vec<SweepRow>> {
    let assignments: Vec<Vec<Option<usize>>> = samples.iter().map(|(_, s)| nearest_joint_indices(s)).collect();
    let k = samples.first().map_or(0, |(_, s)| s.num_joints());
    clips
        .iter()
        .map(|&clip| {
            let cfg = JitterConfig { sigma, clip };
            let mut preds = Predictions::new(k);
            for ((id, s), assigned) in samples.iter().zip(&assignments) {
                let pts: Vec<Vec3> = s.points.iter().map(to_vec3).collect();
                let out = jitter(&pts, &cfg, &mut stream(seed, *id, Stage::Jitter, 0))?;
                let out: Vec<[f32; 3]> = out.iter().map(to_f32).collect();
                preds.insert(*id, predict_from_indices(&out, assigned))?;
            }
            Ok(sweep_row(clip, &metrics_of(samples, &preds, opts)?))
        })
        .collect()
}

/// Baseline metrics with `n_clusters` background clusters of each size added.
/// Cluster points carry the background label, so only unassigned joints
/// (which fall back to the centroid) can move.
pub fn cluster_sweep(
    samples: &[(u64, SyntheticSample)],
    base: &ClusterConfig,
    sizes: &[usize],
    seed: u64,
    opts: &EvalOptions,
) -> Result<Vec<SweepRow>> {
    sizes
        .iter()
        .map(|&size| {
            let cfg = ClusterConfig {
                points_per_cluster: size,
                ..*base
            };
            let noisy = samples
                .iter()
                .map(|(id, s)| {
                    let pts: Vec<Vec3> = s.points.iter().map(to_vec3).collect();
                    let added = noise_cluster_points(&pts, &cfg, &mut stream(seed, *id, Stage::Clusters, 0))?;
                    let mut s = s.clone();
                    let background = s.num_joints() as u16;
                    s.labels.extend(std::iter::repeat_n(background, added.len()));
                    s.points.extend(added.iter().map(to_f32));
                    Ok((*id, s))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut preds = Predictions::new(samples.first().map_or(0, |(_, s)| s.num_joints()));
            for (id, s) in &noisy {
                preds.insert(*id, nearest_joint_baseline(s))?;
            }
            Ok(sweep_row(size as f64, &metrics_of(samples, &preds, opts)?))
        })
        .collect()
}

pub fn sweep_csv(parameter: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{parameter},mpjpe_mm,pa_mpjpe_mm,pck3,pck5\n");
    for r in rows {
        let pa = r.pa_mpjpe_mm.map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(s, "{},{:.6},{pa},{:.6},{:.6}", r.parameter, r.mpjpe_mm, r.pck3, r.pck5);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<(u64, SyntheticSample)> {
        (0..4u64)
            .map(|id| {
                let joints: Vec<[f32; 3]> = (0..24)
                    .map(|k| [10.0 + id as f32, (k as f32 * 0.37).sin() * 0.3, k as f32 * 0.06 - 0.7])
                    .collect();
                let points: Vec<[f32; 3]> = joints.iter().map(|j| [j[0] - 0.05, j[1], j[2]]).collect();
                (
                    id,
                    SyntheticSample {
                        labels: (0..24).collect(),
                        points,
                        joints,
                        visibility: vec![1; 24],
                        meta: Default::default(),
                    },
                )
            })
            .collect()
    }

    #[test]
    fn perfect_predictions() {
        let s = samples();
        let mut preds = Predictions::new(24);
        for (id, x) in &s {
            preds.insert(*id, x.joints.clone()).unwrap();
        }
        let r = evaluate(&s, &preds, &EvalOptions::default()).unwrap();
        assert_eq!(r.metrics.mpjpe_mm, 0.0);
        assert_eq!((r.metrics.pck3, r.metrics.pck5), (1.0, 1.0));
        assert_eq!(r.metrics.n_instances, 4);
    }

    #[test]
    fn missing_predictions_reported() {
        let s = samples();
        let mut preds = Predictions::new(24);
        preds.insert(2, s[2].1.joints.clone()).unwrap();
        let r = evaluate(&s, &preds, &EvalOptions::default()).unwrap();
        assert_eq!(r.missing_ids, vec![0, 1, 3]);
        assert_eq!(r.metrics.n_instances, 1);
    }

    #[test]
    fn jitter_sweep_rows() {
        let s = samples();
        let rows = jitter_sweep(&s, 0.05, &[0.0, 0.01, 0.1], 3, &EvalOptions::default()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[0].mpjpe_mm - 50.0).abs() < 1e-3);
        let csv = sweep_csv("clip_m", &rows);
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn clusters_do_not_move_baseline() {
        let s = samples();
        let base = ClusterConfig {
            n_clusters: 2,
            ..Default::default()
        };
        let rows = cluster_sweep(&s, &base, &[0, 50], 1, &EvalOptions::default()).unwrap();
        assert_eq!(rows[0].mpjpe_mm, rows[1].mpjpe_mm);
    }
}
