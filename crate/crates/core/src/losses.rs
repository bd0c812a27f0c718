//! Reference forward evaluations of the training losses, for validating an
//! external training stack against known values.

use serde::{Deserialize, Serialize};

use crate::body_model::Vec3;
use crate::error::{Error, Result};
use crate::heatmap::HeatmapTriplet;

/// Guard added inside logarithms.
pub const LOG_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub reg: f64,
    pub seg: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { reg: 0.5, seg: 1.0 }
    }
}

/// Visibility-weighted mean joint distance.
pub fn reg_loss(pred: &[Vec3], gt: &[Vec3], visible: &[bool]) -> Result<f64> {
    if pred.len() != gt.len() || gt.len() != visible.len() {
        return Err(Error::Input("joint arrays differ in length".into()));
    }
    let n_visible = visible.iter().filter(|v| **v).count();
    if n_visible == 0 {
        return Err(Error::Input("regression loss undefined with no visible joints".into()));
    }
    let total: f64 = pred
        .iter()
        .zip(gt)
        .zip(visible)
        .filter(|(_, v)| **v)
        .map(|((p, g), _)| (p - g).norm())
        .sum();
    Ok(total / n_visible as f64)
}

fn check_rows(name: &str, values: &[f64], classes: usize) -> Result<usize> {
    if classes == 0 || !values.len().is_multiple_of(classes) {
        return Err(Error::Input(format!("{name}: length {} is not a multiple of {classes}", values.len())));
    }
    Ok(values.len() / classes)
}

fn check_probabilities(pred: &[f64], classes: usize) -> Result<()> {
    for (i, row) in pred.chunks_exact(classes).enumerate() {
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Input(format!("row {i}: probabilities must be finite and non-negative")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Input(format!("row {i}: probabilities sum to {sum}")));
        }
    }
    Ok(())
}

fn check_one_hot(gt: &[f64], classes: usize) -> Result<()> {
    for (i, row) in gt.chunks_exact(classes).enumerate() {
        let ones = row.iter().filter(|v| **v == 1.0).count();
        let zeros = row.iter().filter(|v| **v == 0.0).count();
        if ones != 1 || zeros != classes - 1 {
            return Err(Error::Input(format!("row {i}: ground truth is not one-hot")));
        }
    }
    Ok(())
}

/// Cross entropy `-sum_ij gt_ij * ln(pred_ij + eps)`, summed over points.
pub fn seg_loss(pred: &[f64], gt: &[f64], classes: usize) -> Result<f64> {
    let n = check_rows("pred", pred, classes)?;
    if check_rows("gt", gt, classes)? != n {
        return Err(Error::Input("pred and gt have different point counts".into()));
    }
    check_probabilities(pred, classes)?;
    check_one_hot(gt, classes)?;
    Ok(-pred
        .iter()
        .zip(gt)
        .filter(|(_, g)| **g != 0.0)
        .map(|(p, g)| g * (p + LOG_EPS).ln())
        .sum::<f64>())
}

/// The segmentation loss with the two arguments swapped, `-sum pred * ln(gt + eps)`.
/// With one-hot ground truth this only measures mass off the true class.
pub fn seg_loss_swapped(pred: &[f64], gt: &[f64], classes: usize) -> Result<f64> {
    let n = check_rows("pred", pred, classes)?;
    if check_rows("gt", gt, classes)? != n {
        return Err(Error::Input("pred and gt have different point counts".into()));
    }
    check_probabilities(pred, classes)?;
    check_one_hot(gt, classes)?;
    Ok(-pred.iter().zip(gt).map(|(p, g)| p * (g + LOG_EPS).ln()).sum::<f64>())
}

/// Cross entropy against integer labels.
pub fn seg_loss_labels(pred: &[f64], labels: &[u16], classes: usize) -> Result<f64> {
    let n = check_rows("pred", pred, classes)?;
    if n != labels.len() {
        return Err(Error::Input("pred rows and labels differ in count".into()));
    }
    check_probabilities(pred, classes)?;
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let l = *l as usize;
            if l >= classes {
                return Err(Error::Input(format!("label {l} out of range")));
            }
            Ok(-(pred[i * classes + l] + LOG_EPS).ln())
        })
        .sum()
}

pub fn pretrain_loss(reg: f64, seg: f64, weights: &LossWeights) -> f64 {
    weights.reg * reg + weights.seg * seg
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KlDirection {
    /// `KL(gt || pred)`.
    #[default]
    GtToPred,
    /// `KL(pred || gt)`.
    PredToGt,
}

/// `sum_b p_b * (ln(p_b + eps) - ln(q_b + eps))`, floored at zero.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * ((a + LOG_EPS).ln() - (b + LOG_EPS).ln()))
        .sum::<f64>()
        .max(0.0)
}

/// Sum of per-axis, per-joint KL divergences.
pub fn heatmap_loss(pred: &HeatmapTriplet, gt: &HeatmapTriplet, direction: KlDirection) -> Result<f64> {
    if !pred.same_shape(gt) {
        return Err(Error::Input(format!(
            "heatmap shapes differ: {}x{:?} vs {}x{:?}",
            pred.num_joints, pred.bins, gt.num_joints, gt.bins
        )));
    }
    let mut total = 0.0;
    for c in 0..3 {
        for j in 0..gt.num_joints {
            let (g, p) = (gt.row(c, j), pred.row(c, j));
            total += match direction {
                KlDirection::GtToPred => kl_divergence(g, p),
                KlDirection::PredToGt => kl_divergence(p, g),
            };
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reg_zero_and_345() {
        let gt = vec![Vec3::new(1.0, 2.0, 3.0); 24];
        let vis = vec![true; 24];
        assert_eq!(reg_loss(&gt, &gt, &vis).unwrap(), 0.0);
        let mut pred = gt.clone();
        pred[4] += Vec3::new(0.003, 0.004, 0.0);
        let mut vis1 = vec![false; 24];
        vis1[4] = true;
        assert!((reg_loss(&pred, &gt, &vis1).unwrap() - 0.005).abs() < 1e-15);
        assert!(reg_loss(&pred, &gt, &[false; 24]).is_err());
    }

    #[test]
    fn invisible_joints_ignored() {
        let gt = vec![Vec3::zeros(); 4];
        let vis = [true, false, true, true];
        let mut pred = vec![Vec3::new(0.1, 0.0, 0.0); 4];
        let a = reg_loss(&pred, &gt, &vis).unwrap();
        pred[1] = Vec3::new(100.0, 5.0, 3.0);
        assert_eq!(a, reg_loss(&pred, &gt, &vis).unwrap());
    }

    #[test]
    fn seg_closed_forms() {
        let k1 = 25;
        let n = 7;
        let labels: Vec<u16> = (0..n as u16).map(|i| i * 3 % 25).collect();
        let mut gt = vec![0.0; n * k1];
        for (i, l) in labels.iter().enumerate() {
            gt[i * k1 + *l as usize] = 1.0;
        }
        assert!(seg_loss(&gt, &gt, k1).unwrap().abs() < 1e-9);
        let uniform = vec![1.0 / 25.0; n * k1];
        let expected = n as f64 * 25f64.ln();
        assert!((seg_loss(&uniform, &gt, k1).unwrap() - expected).abs() < 1e-9);
        assert!((seg_loss_labels(&uniform, &labels, k1).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn seg_rejects_malformed() {
        assert!(seg_loss(&[0.5, 0.6], &[1.0, 0.0], 2).is_err());
        assert!(seg_loss(&[0.5, 0.5], &[0.5, 0.5], 2).is_err());
        assert!(seg_loss(&[0.5, 0.5, 1.0], &[1.0, 0.0, 0.0], 2).is_err());
    }

    #[test]
    fn seg_decreases_with_true_class_mass() {
        let classes = 5;
        let gt = [0.0, 0.0, 1.0, 0.0, 0.0];
        let mut last = f64::INFINITY;
        for k in 1..20 {
            let p = k as f64 / 20.0;
            let rest = (1.0 - p) / 4.0;
            let pred = [rest, rest, p, rest, rest];
            let l = seg_loss(&pred, &gt, classes).unwrap();
            assert!(l < last);
            last = l;
        }
    }

    #[test]
    fn pretrain_weights() {
        let w = LossWeights::default();
        assert_eq!((w.reg, w.seg), (0.5, 1.0));
        assert_eq!(pretrain_loss(2.0, 3.0, &w), 4.0);
        let no_seg = LossWeights { reg: 0.5, seg: 0.0 };
        assert_eq!(pretrain_loss(2.0, 3.0, &no_seg), 1.0);
        let a = 3.5;
        assert!((pretrain_loss(a * 2.0, a * 3.0, &w) - a * pretrain_loss(2.0, 3.0, &w)).abs() < 1e-12);
    }

    #[test]
    fn two_bin_kl() {
        let gt = HeatmapTriplet {
            num_joints: 1,
            bins: [2; 3],
            data: [vec![0.9, 0.1], vec![0.9, 0.1], vec![0.9, 0.1]],
        };
        let pred = HeatmapTriplet {
            data: [vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]],
            ..gt.clone()
        };
        let per = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert!((per - 0.3681).abs() < 1e-4);
        let l = heatmap_loss(&pred, &gt, KlDirection::GtToPred).unwrap();
        assert!((l - 3.0 * per).abs() < 1e-9);
        assert_eq!(heatmap_loss(&gt, &gt, KlDirection::GtToPred).unwrap(), 0.0);
        let rev = heatmap_loss(&pred, &gt, KlDirection::PredToGt).unwrap();
        let per_rev = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((rev - 3.0 * per_rev).abs() < 1e-9);
    }

    #[test]
    fn heatmap_shape_mismatch() {
        let a = HeatmapTriplet::zeros(2, [4; 3]);
        let b = HeatmapTriplet::zeros(3, [4; 3]);
        assert!(heatmap_loss(&a, &b, KlDirection::GtToPred).is_err());
    }
}
