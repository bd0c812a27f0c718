//! Per-axis 1D heatmaps for joint coordinates.
//!
//! Each joint is represented on x, y and z by a categorical distribution over
//! evenly spaced bins; decoding takes the peak bin's centre.

use serde::{Deserialize, Serialize};

use crate::body_model::Vec3;
use crate::error::{Error, Result};

/// Side of the default per-sample cube range, metres.
pub const DEFAULT_RANGE_SIDE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSpec {
    pub bins: [usize; 3],
    /// Per-axis `[min, max]`, metres.
    pub range: [[f64; 2]; 3],
    /// Gaussian target width in bins; 0 gives one-hot targets.
    pub sigma: f64,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        let h = DEFAULT_RANGE_SIDE / 2.0;
        Self {
            bins: [128; 3],
            range: [[-h, h]; 3],
            sigma: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DecodeMode {
    #[default]
    Argmax,
    /// Probability-weighted mean of bin centres.
    SoftArgmax,
}

impl HeatmapSpec {
    pub fn with_range(mut self, range: [[f64; 2]; 3]) -> Self {
        self.range = range;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for c in 0..3 {
            let [lo, hi] = self.range[c];
            if self.bins[c] < 2 {
                return Err(Error::Input(format!("axis {c}: need at least 2 bins")));
            }
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Input(format!("axis {c}: invalid range [{lo}, {hi}]")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Input(format!("invalid sigma {}", self.sigma)));
        }
        Ok(())
    }

    pub fn bin_width(&self, axis: usize) -> f64 {
        (self.range[axis][1] - self.range[axis][0]) / self.bins[axis] as f64
    }

    pub fn center(&self, axis: usize, bin: usize) -> f64 {
        self.range[axis][0] + (bin as f64 + 0.5) * self.bin_width(axis)
    }
}

/// Heatmaps of `num_joints` joints; axis `c` stores `num_joints * bins[c]`
/// values, joint-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTriplet {
    pub num_joints: usize,
    pub bins: [usize; 3],
    pub data: [Vec<f64>; 3],
}

impl HeatmapTriplet {
    pub fn zeros(num_joints: usize, bins: [usize; 3]) -> Self {
        Self {
            num_joints,
            bins,
            data: bins.map(|n| vec![0.0; num_joints * n]),
        }
    }

    pub fn row(&self, axis: usize, joint: usize) -> &[f64] {
        let n = self.bins[axis];
        &self.data[axis][joint * n..(joint + 1) * n]
    }

    pub fn row_mut(&mut self, axis: usize, joint: usize) -> &mut [f64] {
        let n = self.bins[axis];
        &mut self.data[axis][joint * n..(joint + 1) * n]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.num_joints == other.num_joints && self.bins == other.bins
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub heatmaps: HeatmapTriplet,
    /// Joints that fell outside the range on any axis and were clamped.
    pub clamped: Vec<bool>,
}

/// Gaussian (or one-hot for `sigma == 0`) targets, each row normalised to 1.
pub fn encode(joints: &[Vec3], spec: &HeatmapSpec) -> Result<Encoded> {
    spec.validate()?;
    if joints.iter().any(|j| !j.iter().all(|x| x.is_finite())) {
        return Err(Error::Input("non-finite joint coordinate".into()));
    }
    let mut hm = HeatmapTriplet::zeros(joints.len(), spec.bins);
    let mut clamped = vec![false; joints.len()];
    for (i, joint) in joints.iter().enumerate() {
        for c in 0..3 {
            let [lo, hi] = spec.range[c];
            let x = joint[c].clamp(lo, hi);
            clamped[i] |= x != joint[c];
            let row = hm.row_mut(c, i);
            if spec.sigma == 0.0 {
                let b = (((x - lo) / spec.bin_width(c)).floor() as usize).min(spec.bins[c] - 1);
                row[b] = 1.0;
                continue;
            }
            let s = spec.sigma * spec.bin_width(c);
            let denom = 2.0 * s * s;
            for (b, v) in row.iter_mut().enumerate() {
                let d = spec.center(c, b) - x;
                *v = (-d * d / denom).exp();
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    Ok(Encoded { heatmaps: hm, clamped })
}

/// Index of the largest value; ties go to the lowest index.
pub fn peak(row: &[f64]) -> usize {
    let mut best = 0;
    for (b, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = b;
        }
    }
    best
}

pub fn decode(hm: &HeatmapTriplet, spec: &HeatmapSpec) -> Result<Vec<Vec3>> {
    decode_with(hm, spec, DecodeMode::Argmax)
}

pub fn decode_with(hm: &HeatmapTriplet, spec: &HeatmapSpec, mode: DecodeMode) -> Result<Vec<Vec3>> {
    spec.validate()?;
    if hm.bins != spec.bins {
        return Err(Error::Input(format!("heatmap bins {:?} differ from spec {:?}", hm.bins, spec.bins)));
    }
    (0..hm.num_joints)
        .map(|i| {
            let mut out = Vec3::zeros();
            for c in 0..3 {
                let row = hm.row(c, i);
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Input(format!("joint {i} axis {c}: invalid heatmap values")));
                }
                let total: f64 = row.iter().sum();
                if total <= 0.0 {
                    return Err(Error::Input(format!("joint {i} axis {c}: all-zero heatmap")));
                }
                out[c] = match mode {
                    DecodeMode::Argmax => spec.center(c, peak(row)),
                    DecodeMode::SoftArgmax => {
                        row.iter().enumerate().map(|(b, v)| v * spec.center(c, b)).sum::<f64>() / total
                    }
                };
            }
            Ok(out)
        })
        .collect()
}

/// Cube of side 3 m centred on the centroid of `points`.
pub fn default_range(points: &[Vec3]) -> Result<[[f64; 2]; 3]> {
    if points.is_empty() {
        return Err(Error::Input("default range needs at least one point".into()));
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let h = DEFAULT_RANGE_SIDE / 2.0;
    Ok(std::array::from_fn(|c| [centroid[c] - h, centroid[c] + h]))
}
