use super::{to_f32, to_vec3};
use crate::body_model::Vec3;
use crate::error::Result;
use crate::io::predictions::Predictions;
use crate::io::record::SyntheticSample;

/// Index of the point nearest to each joint among points carrying that
/// joint's label (lowest index on ties).
pub fn nearest_joint_indices(sample: &SyntheticSample) -> Vec<Option<usize>> {
    let mut best: Vec<Option<(f64, usize)>> = vec![None; sample.num_joints()];
    for (i, (p, &l)) in sample.points.iter().zip(&sample.labels).enumerate() {
        let Some(slot) = best.get_mut(l as usize) else { continue };
        let d = (to_vec3(p) - to_vec3(&sample.joints[l as usize])).norm_squared();
        if slot.is_none_or(|(bd, _)| d < bd) {
            *slot = Some((d, i));
        }
    }
    best.iter().map(|b| b.map(|(_, i)| i)).collect()
}

/// Prediction from a fixed point assignment: the chosen point's position, or
/// the centroid of all points for unassigned joints.
pub fn predict_from_indices(points: &[[f32; 3]], indices: &[Option<usize>]) -> Vec<[f32; 3]> {
    let centroid = if points.is_empty() {
        Vec3::zeros()
    } else {
        points.iter().map(to_vec3).sum::<Vec3>() / points.len() as f64
    };
    indices
        .iter()
        .map(|i| i.map_or_else(|| to_f32(&centroid), |i| points[i]))
        .collect()
}

/// Each joint takes the position of the nearest point carrying its label;
/// joints without such a point take the centroid of all points.
pub fn nearest_joint_baseline(sample: &SyntheticSample) -> Vec<[f32; 3]> {
    predict_from_indices(&sample.points, &nearest_joint_indices(sample))
}

pub fn baseline_predictions(samples: &[(u64, SyntheticSample)]) -> Result<Predictions> {
    let k = samples.first().map_or(0, |(_, s)| s.num_joints());
    let mut preds = Predictions::new(k);
    for (id, s) in samples {
        preds.insert(*id, nearest_joint_baseline(s))?;
    }
    Ok(preds)
}
