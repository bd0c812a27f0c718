//! Pose metrics: MPJPE, Procrustes-aligned MPJPE, PCK at torso fractions, and
//! dataset aggregation including worst-instance statistics.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::body_model::{Mat3, Vec3, JOINT_NAMES, NUM_JOINTS};
use crate::error::{Error, Result};

/// PCK-3 threshold as a fraction of torso length.
pub const PCK3: f64 = 0.3;
/// PCK-5 threshold as a fraction of torso length.
pub const PCK5: f64 = 0.5;
/// Instances kept by default in worst-instance statistics.
pub const DEFAULT_WORST_N: usize = 600;

const M_TO_MM: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSpec {
    pub joint_names: Vec<String>,
    /// Joints whose ground-truth distance defines the torso length.
    pub torso_pair: (usize, usize),
}

impl Default for SkeletonSpec {
    /// SMPL layout; torso = pelvis (0) to neck (12).
    fn default() -> Self {
        Self {
            joint_names: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
            torso_pair: (0, 12),
        }
    }
}

impl SkeletonSpec {
    pub fn num_joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.torso_pair;
        let k = self.num_joints();
        if a == b || a >= k || b >= k {
            return Err(Error::Input(format!("invalid torso pair ({a}, {b}) for {k} joints")));
        }
        Ok(())
    }

    pub fn torso_length(&self, gt: &[Vec3]) -> f64 {
        (gt[self.torso_pair.0] - gt[self.torso_pair.1]).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlignMode {
    /// Scale, rotation and translation.
    #[default]
    Similarity,
    /// Rotation and translation only.
    Rigid,
}

fn check_lengths(pred: &[Vec3], gt: &[Vec3], visible: Option<&[bool]>) -> Result<()> {
    if pred.len() != gt.len() || visible.is_some_and(|v| v.len() != gt.len()) {
        return Err(Error::Input("prediction, ground truth and visibility differ in length".into()));
    }
    if gt.is_empty() {
        return Err(Error::Input("no joints".into()));
    }
    Ok(())
}

/// Sum with pairwise (cascade) accumulation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Order-independent mean: values are sorted before pairwise summation.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    pairwise_sum(values) / values.len() as f64
}

/// Mean visible-joint error in millimetres.
pub fn mpjpe(pred: &[Vec3], gt: &[Vec3], visible: &[bool]) -> Result<f64> {
    check_lengths(pred, gt, Some(visible))?;
    let errors: Vec<f64> = pred
        .iter()
        .zip(gt)
        .zip(visible)
        .filter(|(_, v)| **v)
        .map(|((p, g), _)| (p - g).norm())
        .collect();
    if errors.is_empty() {
        return Err(Error::Input("MPJPE undefined with no visible joints".into()));
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64 * M_TO_MM)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Similarity {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p * self.scale + self.translation
    }
}

/// Ratio below which the second principal extent counts as collinear.
const RANK_TOL: f64 = 1e-12;

fn centered(points: &[Vec3]) -> (Vec3, Vec<Vec3>) {
    let mean = points.iter().sum::<Vec3>() / points.len() as f64;
    (mean, points.iter().map(|p| p - mean).collect())
}

fn is_collinear(centered: &[Vec3]) -> bool {
    let scatter: Mat3 = centered.iter().map(|x| x * x.transpose()).sum();
    let mut eig: Vec<f64> = scatter.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    !(eig[0] > 0.0) || eig[1] <= RANK_TOL * eig[0]
}

/// Least-squares transform mapping `pred` onto `gt` (Umeyama), with the
/// rotation constrained to det +1.
pub fn procrustes_align(pred: &[Vec3], gt: &[Vec3], mode: AlignMode) -> Result<Similarity> {
    check_lengths(pred, gt, None)?;
    if gt.len() < 3 {
        return Err(Error::Degenerate("alignment needs at least 3 joints".into()));
    }
    let (mu_p, xs) = centered(pred);
    let (mu_g, ys) = centered(gt);
    if is_collinear(&ys) || is_collinear(&xs) {
        return Err(Error::Degenerate("collinear or coincident joints cannot be aligned".into()));
    }
    let h: Mat3 = ys.iter().zip(&xs).map(|(y, x)| y * x.transpose()).sum();
    let svd = SVD::new(h, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Degenerate("SVD failed".into())),
    };
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    // nalgebra does not sort singular values; put the reflection on the smallest.
    let order = {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
        idx
    };
    let mut u_sorted = Mat3::zeros();
    let mut vt_sorted = Mat3::zeros();
    let mut s_sorted = Vec3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        vt_sorted.set_row(dst, &v_t.row(src));
        s_sorted[dst] = svd.singular_values[src];
    }
    let rotation = u_sorted * d * vt_sorted;
    let scale = match mode {
        AlignMode::Rigid => 1.0,
        AlignMode::Similarity => {
            let var: f64 = xs.iter().map(|x| x.norm_squared()).sum();
            (s_sorted[0] * d[(0, 0)] + s_sorted[1] * d[(1, 1)] + s_sorted[2] * d[(2, 2)]) / var
        }
    };
    let translation = mu_g - rotation * mu_p * scale;
    Ok(Similarity {
        scale,
        rotation,
        translation,
    })
}

/// MPJPE after Procrustes alignment over all joints, millimetres.
pub fn pa_mpjpe(pred: &[Vec3], gt: &[Vec3], mode: AlignMode) -> Result<f64> {
    let t = procrustes_align(pred, gt, mode)?;
    let aligned: Vec<Vec3> = pred.iter().map(|p| t.apply(p)).collect();
    mpjpe(&aligned, gt, &vec![true; gt.len()])
}

/// Fraction of visible joints within `fraction * torso_length` of ground truth.
pub fn pck(pred: &[Vec3], gt: &[Vec3], visible: &[bool], skeleton: &SkeletonSpec, fraction: f64) -> Result<f64> {
    check_lengths(pred, gt, Some(visible))?;
    skeleton.validate()?;
    if skeleton.num_joints() != gt.len() {
        return Err(Error::Input("skeleton joint count differs from input".into()));
    }
    let torso = skeleton.torso_length(gt);
    if !(torso > 0.0) {
        return Err(Error::Degenerate("zero torso length".into()));
    }
    let threshold = fraction * torso;
    let mut n = 0usize;
    let mut hit = 0usize;
    for ((p, g), v) in pred.iter().zip(gt).zip(visible) {
        if *v {
            n += 1;
            hit += ((p - g).norm() < threshold) as usize;
        }
    }
    if n == 0 {
        return Err(Error::Input("PCK undefined with no visible joints".into()));
    }
    Ok(hit as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_instances: usize,
    pub mpjpe_mm: f64,
    /// Absent when any instance had partial visibility.
    pub pa_mpjpe_mm: Option<f64>,
    pub pck3: f64,
    pub pck5: f64,
    /// Mean error per joint, mm; `None` where the joint was never visible.
    pub per_joint_error_mm: Vec<Option<f64>>,
    pub torso_pair: (usize, usize),
}

/// All metrics for one instance. PA-MPJPE is skipped unless every joint is
/// visible.
pub fn evaluate_instance(
    pred: &[Vec3],
    gt: &[Vec3],
    visible: &[bool],
    skeleton: &SkeletonSpec,
    align: AlignMode,
) -> Result<MetricsReport> {
    let mpjpe_mm = mpjpe(pred, gt, visible)?;
    let pa_mpjpe_mm = if visible.iter().all(|v| *v) {
        Some(pa_mpjpe(pred, gt, align)?)
    } else {
        None
    };
    Ok(MetricsReport {
        n_instances: 1,
        mpjpe_mm,
        pa_mpjpe_mm,
        pck3: pck(pred, gt, visible, skeleton, PCK3)?,
        pck5: pck(pred, gt, visible, skeleton, PCK5)?,
        per_joint_error_mm: pred
            .iter()
            .zip(gt)
            .zip(visible)
            .map(|((p, g), v)| v.then(|| (p - g).norm() * M_TO_MM))
            .collect(),
        torso_pair: skeleton.torso_pair,
    })
}

/// Dataset means over per-instance reports.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Input("cannot aggregate zero instances".into()))?;
    if reports.len() == 1 {
        return Ok(first.clone());
    }
    let k = first.per_joint_error_mm.len();
    let collect = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Option<f64> {
        let mut v: Vec<f64> = reports.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| stable_mean(&mut v))
    };
    let mpjpe_mm = collect(&|r| Some(r.mpjpe_mm)).unwrap();
    let pck3 = collect(&|r| Some(r.pck3)).unwrap();
    let pck5 = collect(&|r| Some(r.pck5)).unwrap();
    let pa_mpjpe_mm = if reports.iter().all(|r| r.pa_mpjpe_mm.is_some()) {
        collect(&|r| r.pa_mpjpe_mm)
    } else {
        None
    };
    let per_joint_error_mm = (0..k)
        .map(|j| collect(&|r| r.per_joint_error_mm.get(j).copied().flatten()))
        .collect();
    Ok(MetricsReport {
        n_instances: reports.iter().map(|r| r.n_instances).sum(),
        mpjpe_mm,
        pa_mpjpe_mm,
        pck3,
        pck5,
        per_joint_error_mm,
        torso_pair: first.torso_pair,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstStats {
    pub requested: usize,
    pub used: usize,
    pub mean_mpjpe_mm: f64,
    pub per_joint_mean_mm: Vec<Option<f64>>,
    pub per_joint_var_mm2: Vec<Option<f64>>,
}

/// Per-joint error mean and (population) variance over the `n` instances with
/// the highest MPJPE. `n` larger than the dataset is clamped.
pub fn worst_instances(reports: &[MetricsReport], n: usize) -> Result<WorstStats> {
    if reports.is_empty() {
        return Err(Error::Input("no instances".into()));
    }
    let used = if n > reports.len() {
        log::warn!("requested worst {n} of {} instances; using all", reports.len());
        reports.len()
    } else {
        n
    };
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|a, b| reports[*b].mpjpe_mm.total_cmp(&reports[*a].mpjpe_mm).then(a.cmp(b)));
    let worst: Vec<&MetricsReport> = order[..used].iter().map(|i| &reports[*i]).collect();
    let k = reports[0].per_joint_error_mm.len();
    let mut per_joint_mean_mm = Vec::with_capacity(k);
    let mut per_joint_var_mm2 = Vec::with_capacity(k);
    for j in 0..k {
        let mut errs: Vec<f64> = worst
            .iter()
            .filter_map(|r| r.per_joint_error_mm.get(j).copied().flatten())
            .collect();
        if errs.is_empty() {
            per_joint_mean_mm.push(None);
            per_joint_var_mm2.push(None);
            continue;
        }
        let mean = stable_mean(&mut errs);
        let mut sq: Vec<f64> = errs.iter().map(|e| (e - mean).powi(2)).collect();
        per_joint_mean_mm.push(Some(mean));
        per_joint_var_mm2.push(Some(stable_mean(&mut sq)));
    }
    let mut m: Vec<f64> = worst.iter().map(|r| r.mpjpe_mm).collect();
    Ok(WorstStats {
        requested: n,
        used,
        mean_mpjpe_mm: if used == 0 { 0.0 } else { stable_mean(&mut m) },
        per_joint_mean_mm,
        per_joint_var_mm2,
    })
}

/// End effectors whose errors are usually reported separately.
pub const END_JOINTS: [usize; 8] = [7, 8, 10, 11, 20, 21, 22, 23];

const _: () = assert!(END_JOINTS.len() <= NUM_JOINTS);
