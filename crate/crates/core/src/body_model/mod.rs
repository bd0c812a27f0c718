//! Parametric human body: blendshapes, joint regression and linear blend
//! skinning over a 24-joint kinematic tree.
//!
//! Tensors are stored as `f32` exactly as they appear in the `LBM1` container;
//! all evaluation happens in `f64`.

mod container;
mod toy;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub use container::{load_body_model, save_body_model};
pub use toy::{gen_toy_model, toy_pose_rows, TOY_FACES, TOY_VERTICES};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub const NUM_JOINTS: usize = 24;
pub const SHAPE_DIM: usize = 10;
pub const POSE_DIM: usize = 3 * NUM_JOINTS;
pub const POSE_FEATURES: usize = 9 * (NUM_JOINTS - 1);
/// Parent index of the kinematic root.
pub const ROOT_PARENT: i32 = -1;

const WEIGHT_SUM_TOL: f64 = 1e-5;

/// Conventional SMPL joint names, index-aligned with the kinematic tree.
pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hand",
    "right_hand",
];

/// Raw tensors of a body model, laid out as in the container file.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyModelParts {
    /// `N_V x 3`, row-major.
    pub template_vertices: Vec<f32>,
    pub faces: Vec<[u32; 3]>,
    /// `N_V x 3 x 10`.
    pub shape_dirs: Vec<f32>,
    /// `N_V x 3 x 207`.
    pub pose_dirs: Vec<f32>,
    /// `K x N_V`.
    pub joint_regressor: Vec<f32>,
    /// `N_V x K`.
    pub skinning_weights: Vec<f32>,
    pub parents: Vec<i32>,
}

/// Validated, immutable body model.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    parts: BodyModelParts,
    num_vertices: usize,
    /// Joints ordered so every parent precedes its children.
    order: Vec<usize>,
    face_labels: Vec<u16>,
}

/// Output of [`forward`]: posed mesh, posed joints and the face label map.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedBody {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub joints: Vec<Vec3>,
    pub face_joint_label: Vec<u16>,
}

impl BodyModel {
    pub fn from_parts(parts: BodyModelParts) -> Result<Self> {
        let nv = parts.template_vertices.len() / 3;
        let k = parts.parents.len();
        if k != NUM_JOINTS {
            return Err(Error::Dimension(format!("expected {NUM_JOINTS} joints, got {k}")));
        }
        if nv == 0 || parts.template_vertices.len() != nv * 3 {
            return Err(Error::Dimension(format!(
                "template_vertices has {} values, not a positive multiple of 3",
                parts.template_vertices.len()
            )));
        }
        if parts.faces.is_empty() {
            return Err(Error::Dimension("model has no faces".into()));
        }
        let expect = |field: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Dimension(format!("{field}: expected {want} values, got {got}")))
            }
        };
        expect("shape_dirs", parts.shape_dirs.len(), nv * 3 * SHAPE_DIM)?;
        expect("pose_dirs", parts.pose_dirs.len(), nv * 3 * POSE_FEATURES)?;
        expect("joint_regressor", parts.joint_regressor.len(), k * nv)?;
        expect("skinning_weights", parts.skinning_weights.len(), nv * k)?;

        let finite = |field: &'static str, v: &[f32]| {
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                Err(Error::validation(field, format!("non-finite value at index {i}")))
            } else {
                Ok(())
            }
        };
        finite("template_vertices", &parts.template_vertices)?;
        finite("shape_dirs", &parts.shape_dirs)?;
        finite("pose_dirs", &parts.pose_dirs)?;
        finite("joint_regressor", &parts.joint_regressor)?;
        finite("skinning_weights", &parts.skinning_weights)?;

        for (fi, face) in parts.faces.iter().enumerate() {
            if face.iter().any(|&i| i as usize >= nv) {
                return Err(Error::validation(
                    "faces",
                    format!("face {fi} references vertex >= {nv}: {face:?}"),
                ));
            }
        }
        for (v, row) in parts.skinning_weights.chunks_exact(k).enumerate() {
            if row.iter().any(|&w| w < 0.0) {
                return Err(Error::validation(
                    "skinning_weights",
                    format!("row {v} has a negative weight"),
                ));
            }
            let sum: f64 = row.iter().map(|&w| w as f64).sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::validation(
                    "skinning_weights",
                    format!("row {v} sums to {sum}"),
                ));
            }
        }
        for (j, row) in parts.joint_regressor.chunks_exact(nv).enumerate() {
            let sum: f64 = row.iter().map(|&w| w as f64).sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::validation(
                    "joint_regressor",
                    format!("row {j} sums to {sum}"),
                ));
            }
        }
        let order = kinematic_order(&parts.parents)?;
        let face_labels = face_joint_labels(&parts.skinning_weights, k, &parts.faces);
        Ok(Self {
            parts,
            num_vertices: nv,
            order,
            face_labels,
        })
    }

    pub fn parts(&self) -> &BodyModelParts {
        &self.parts
    }

    pub fn into_parts(self) -> BodyModelParts {
        self.parts
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_faces(&self) -> usize {
        self.parts.faces.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parts.parents.len()
    }

    pub fn parents(&self) -> &[i32] {
        &self.parts.parents
    }

    pub fn face_labels(&self) -> &[u16] {
        &self.face_labels
    }

    pub fn template_vertex(&self, v: usize) -> Vec3 {
        let t = &self.parts.template_vertices[3 * v..3 * v + 3];
        Vec3::new(t[0] as f64, t[1] as f64, t[2] as f64)
    }

    pub fn shape_dir(&self, v: usize, axis: usize, basis: usize) -> f64 {
        self.parts.shape_dirs[(v * 3 + axis) * SHAPE_DIM + basis] as f64
    }

    /// `joint_regressor * vertices`.
    pub fn regress_joints(&self, vertices: &[Vec3]) -> Vec<Vec3> {
        self.parts
            .joint_regressor
            .chunks_exact(self.num_vertices)
            .map(|row| {
                let mut j = Vec3::zeros();
                for (w, v) in row.iter().zip(vertices) {
                    if *w != 0.0 {
                        j += *v * (*w as f64);
                    }
                }
                j
            })
            .collect()
    }

    fn shaped_vertices(&self, beta: &[f64]) -> Vec<Vec3> {
        let sd = &self.parts.shape_dirs;
        (0..self.num_vertices)
            .map(|v| {
                let mut out = self.template_vertex(v);
                for c in 0..3 {
                    let row = &sd[(v * 3 + c) * SHAPE_DIM..(v * 3 + c + 1) * SHAPE_DIM];
                    let d: f64 = row.iter().zip(beta).map(|(s, b)| *s as f64 * b).sum();
                    out[c] += d;
                }
                out
            })
            .collect()
    }

    fn shape_displacements(&self, direction: &[f64]) -> Vec<Vec3> {
        let sd = &self.parts.shape_dirs;
        (0..self.num_vertices)
            .map(|v| {
                Vec3::from_fn(|c, _| {
                    let row = &sd[(v * 3 + c) * SHAPE_DIM..(v * 3 + c + 1) * SHAPE_DIM];
                    row.iter().zip(direction).map(|(s, b)| *s as f64 * b).sum()
                })
            })
            .collect()
    }

    /// Per-joint blend transforms `(rotation, translation)` such that a rest
    /// point `x` skinned rigidly to joint `k` maps to `R_k x + a_k`.
    fn blend_transforms(&self, rest_joints: &[Vec3], local: &[Mat3]) -> Vec<(Mat3, Vec3)> {
        let k = self.num_joints();
        let mut out = vec![(Mat3::identity(), Vec3::zeros()); k];
        for &j in &self.order {
            let parent = self.parts.parents[j];
            if parent < 0 {
                let r = local[j];
                out[j] = (r, (Mat3::identity() - r) * rest_joints[j]);
            } else {
                let (rp, ap) = out[parent as usize];
                let r = rp * local[j];
                out[j] = (r, ap + (rp - r) * rest_joints[j]);
            }
        }
        out
    }

    fn skin(&self, rest: &[Vec3], transforms: &[(Mat3, Vec3)]) -> Vec<Vec3> {
        let k = self.num_joints();
        rest.iter()
            .zip(self.parts.skinning_weights.chunks_exact(k))
            .map(|(x, weights)| {
                let mut delta = Vec3::zeros();
                for (w, (r, a)) in weights.iter().zip(transforms) {
                    if *w != 0.0 {
                        delta += ((r - Mat3::identity()) * x + a) * (*w as f64);
                    }
                }
                x + delta
            })
            .collect()
    }
}

/// Axis-angle to rotation matrix. Exactly the identity for a zero vector.
pub fn rodrigues(axis_angle: Vec3) -> Mat3 {
    let angle = axis_angle.norm();
    let k = axis_angle.cross_matrix();
    if angle < 1e-8 {
        return Mat3::identity() + k;
    }
    let (s, c) = angle.sin_cos();
    let k = k / angle;
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

fn check_params(beta: &[f64], theta: &[f64]) -> Result<()> {
    if beta.len() != SHAPE_DIM {
        return Err(Error::Dimension(format!(
            "beta must have {SHAPE_DIM} entries, got {}",
            beta.len()
        )));
    }
    if theta.len() != POSE_DIM {
        return Err(Error::Dimension(format!(
            "theta must have {POSE_DIM} entries, got {}",
            theta.len()
        )));
    }
    if beta.iter().chain(theta).any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite shape or pose parameter".into()));
    }
    Ok(())
}

fn local_rotations(theta: &[f64]) -> Vec<Mat3> {
    theta
        .chunks_exact(3)
        .map(|r| rodrigues(Vec3::new(r[0], r[1], r[2])))
        .collect()
}

/// Flattened `(R_k - I)` of the 23 non-root joints.
fn pose_features(local: &[Mat3]) -> Vec<f64> {
    let mut f = Vec::with_capacity(POSE_FEATURES);
    for r in &local[1..] {
        for row in 0..3 {
            for col in 0..3 {
                let id = if row == col { 1.0 } else { 0.0 };
                f.push(r[(row, col)] - id);
            }
        }
    }
    f
}

/// Poses the model: blendshapes, joint regression, then linear blend skinning.
pub fn forward(model: &BodyModel, beta: &[f64], theta: &[f64]) -> Result<PosedBody> {
    check_params(beta, theta)?;
    let local = local_rotations(theta);
    let mut rest = model.shaped_vertices(beta);
    let rest_joints = model.regress_joints(&rest);

    let features = pose_features(&local);
    if features.iter().any(|f| *f != 0.0) {
        let pd = &model.parts.pose_dirs;
        for (v, x) in rest.iter_mut().enumerate() {
            for c in 0..3 {
                let row = &pd[(v * 3 + c) * POSE_FEATURES..(v * 3 + c + 1) * POSE_FEATURES];
                x[c] += row.iter().zip(&features).map(|(p, f)| *p as f64 * f).sum::<f64>();
            }
        }
    }

    let transforms = model.blend_transforms(&rest_joints, &local);
    let vertices = model.skin(&rest, &transforms);
    let joints = rest_joints
        .iter()
        .zip(&transforms)
        .map(|(j, (r, a))| r * j + a)
        .collect();
    Ok(PosedBody {
        vertices,
        faces: model.parts.faces.clone(),
        joints,
        face_joint_label: model.face_labels.clone(),
    })
}

/// Directional derivative of posed vertices and joints with respect to `beta`
/// along `direction`, at `(beta, theta)`.
pub fn shape_jvp(
    model: &BodyModel,
    beta: &[f64],
    theta: &[f64],
    direction: &[f64],
) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    check_params(beta, theta)?;
    if direction.len() != SHAPE_DIM {
        return Err(Error::Dimension("direction must have 10 entries".into()));
    }
    let local = local_rotations(theta);
    let rest_joints = model.regress_joints(&model.shaped_vertices(beta));
    let transforms = model.blend_transforms(&rest_joints, &local);

    let d_rest = model.shape_displacements(direction);
    let d_joints = model.regress_joints(&d_rest);
    // Rotations do not depend on beta, so transform derivatives are the
    // blend translations evaluated at the joint derivatives.
    let d_transforms = model.blend_transforms(&d_joints, &local);
    let d_vertices = d_rest
        .iter()
        .zip(model.parts.skinning_weights.chunks_exact(model.num_joints()))
        .map(|(dx, weights)| {
            let mut delta = Vec3::zeros();
            for ((w, (r, _)), (_, da)) in weights.iter().zip(&transforms).zip(&d_transforms) {
                if *w != 0.0 {
                    delta += ((r - Mat3::identity()) * dx + da) * (*w as f64);
                }
            }
            dx + delta
        })
        .collect();
    let d_posed_joints = d_joints
        .iter()
        .zip(transforms.iter().zip(&d_transforms))
        .map(|(dj, ((r, _), (_, da)))| r * dj + da)
        .collect();
    Ok((d_vertices, d_posed_joints))
}

fn kinematic_order(parents: &[i32]) -> Result<Vec<usize>> {
    let k = parents.len();
    let roots: Vec<usize> = (0..k).filter(|&j| parents[j] == ROOT_PARENT).collect();
    if roots.len() != 1 {
        return Err(Error::validation(
            "parents",
            format!("expected exactly one root, found {}", roots.len()),
        ));
    }
    if let Some(j) = (0..k).find(|&j| parents[j] != ROOT_PARENT && (parents[j] < 0 || parents[j] as usize >= k)) {
        return Err(Error::validation(
            "parents",
            format!("joint {j} has out-of-range parent {}", parents[j]),
        ));
    }
    let mut order = Vec::with_capacity(k);
    let mut queue = std::collections::VecDeque::from(roots);
    while let Some(j) = queue.pop_front() {
        order.push(j);
        queue.extend((0..k).filter(|&c| parents[c] == j as i32));
    }
    if order.len() != k {
        return Err(Error::validation("parents", "kinematic tree contains a cycle"));
    }
    Ok(order)
}

/// Vertex label = argmax skinning weight (lowest joint on ties); face label =
/// majority of its vertex labels, else the label of its lowest-index vertex.
pub fn face_joint_labels(skinning: &[f32], num_joints: usize, faces: &[[u32; 3]]) -> Vec<u16> {
    let vertex_label: Vec<u16> = skinning
        .chunks_exact(num_joints)
        .map(|row| {
            let mut best = 0;
            for (j, w) in row.iter().enumerate() {
                if *w > row[best] {
                    best = j;
                }
            }
            best as u16
        })
        .collect();
    faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| vertex_label[i as usize]);
            if a == b || a == c {
                a
            } else if b == c {
                b
            } else {
                let lowest = f.iter().min().unwrap();
                vertex_label[*lowest as usize]
            }
        })
        .collect()
}
