//! Procedural 24-joint humanoid used when real model weights are unavailable.
//!
//! Each joint owns one closed hexagonal tube (3 rings x 6 vertices, 32
//! triangles) running from the joint towards its primary child.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{BodyModel, BodyModelParts, NUM_JOINTS, POSE_FEATURES, SHAPE_DIM};
use crate::rng;

const RING: usize = 6;
const RINGS: usize = 3;
const PART_VERTICES: usize = RING * RINGS;
const PART_FACES: usize = 2 * RING * (RINGS - 1) + 2 * (RING - 2);

pub const TOY_VERTICES: usize = NUM_JOINTS * PART_VERTICES;
pub const TOY_FACES: usize = NUM_JOINTS * PART_FACES;

const PARENTS: [i32; NUM_JOINTS] = [
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
];

// Rest joints in metres: Z up, Y to the body's left, X forward.
const REST_JOINTS: [[f64; 3]; NUM_JOINTS] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.09, -0.09],
    [0.0, -0.09, -0.09],
    [0.0, 0.0, 0.11],
    [0.01, 0.10, -0.47],
    [0.01, -0.10, -0.47],
    [0.0, 0.0, 0.24],
    [-0.02, 0.10, -0.87],
    [-0.02, -0.10, -0.87],
    [0.0, 0.0, 0.30],
    [0.10, 0.10, -0.93],
    [0.10, -0.10, -0.93],
    [0.0, 0.0, 0.52],
    [0.0, 0.08, 0.42],
    [0.0, -0.08, 0.42],
    [0.02, 0.0, 0.62],
    [0.0, 0.18, 0.44],
    [0.0, -0.18, 0.44],
    [0.0, 0.44, 0.44],
    [0.0, -0.44, 0.44],
    [0.0, 0.69, 0.44],
    [0.0, -0.69, 0.44],
    [0.0, 0.77, 0.44],
    [0.0, -0.77, 0.44],
];

/// Primary child of each joint, or `None` for end effectors.
const PRIMARY_CHILD: [Option<usize>; NUM_JOINTS] = [
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(10),
    Some(11),
    Some(12),
    None,
    None,
    Some(15),
    Some(16),
    Some(17),
    None,
    Some(18),
    Some(19),
    Some(20),
    Some(21),
    Some(22),
    Some(23),
    None,
    None,
];

const RADIUS: [f64; NUM_JOINTS] = [
    0.12, 0.08, 0.08, 0.11, 0.055, 0.055, 0.12, 0.045, 0.045, 0.12, 0.04, 0.04, 0.05, 0.05, 0.05,
    0.09, 0.045, 0.045, 0.04, 0.04, 0.035, 0.035, 0.03, 0.03,
];

/// Tip offset for end effectors.
fn tip_offset(j: usize) -> [f64; 3] {
    match j {
        10 | 11 => [0.14, 0.0, 0.0],
        15 => [0.0, 0.0, 0.23],
        22 => [0.0, 0.10, 0.0],
        23 => [0.0, -0.10, 0.0],
        _ => unreachable!("joint {j} has a primary child"),
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Deterministic toy body model. Different seeds perturb joint placement,
/// limb radii and the blendshape bases.
pub fn gen_toy_model(seed: u64) -> BodyModel {
    let mut rng = rng::seeded(seed);
    let mut joints = REST_JOINTS;
    for j in joints.iter_mut().skip(1) {
        for c in j.iter_mut() {
            *c += rng.random_range(-0.01..0.01);
        }
    }
    let radii: Vec<f64> = RADIUS.iter().map(|r| r * rng.random_range(0.9..1.1)).collect();
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU / RING as f64);

    let nv = TOY_VERTICES;
    let mut template = Vec::with_capacity(nv * 3);
    let mut faces = Vec::with_capacity(TOY_FACES);
    let mut skinning = vec![0.0f32; nv * NUM_JOINTS];
    let mut regressor = vec![0.0f32; NUM_JOINTS * nv];
    // Ring radial directions, needed for the girth blendshape.
    let mut radial = Vec::with_capacity(nv);

    for j in 0..NUM_JOINTS {
        let start = joints[j];
        let end = match PRIMARY_CHILD[j] {
            Some(c) => joints[c],
            None => {
                let t = tip_offset(j);
                [start[0] + t[0], start[1] + t[1], start[2] + t[2]]
            }
        };
        let axis = sub(end, start);
        let len = norm(axis);
        let d = scale(axis, 1.0 / len);
        let helper = if d[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
        let e1 = {
            let c = cross(helper, d);
            scale(c, 1.0 / norm(c))
        };
        let e2 = cross(d, e1);
        let base = j * PART_VERTICES;
        for ring in 0..RINGS {
            let t = ring as f64 / (RINGS - 1) as f64;
            for m in 0..RING {
                let phi = phase + std::f64::consts::TAU * m as f64 / RING as f64;
                let (s, c) = phi.sin_cos();
                let dir = [
                    c * e1[0] + s * e2[0],
                    c * e1[1] + s * e2[1],
                    c * e1[2] + s * e2[2],
                ];
                for k in 0..3 {
                    template.push((start[k] + t * len * d[k] + radii[j] * dir[k]) as f32);
                }
                radial.push(dir);
                let v = base + ring * RING + m;
                let row = &mut skinning[v * NUM_JOINTS..(v + 1) * NUM_JOINTS];
                let neighbour = match ring {
                    0 if PARENTS[j] >= 0 => Some(PARENTS[j] as usize),
                    2 => PRIMARY_CHILD[j],
                    _ => None,
                };
                match neighbour {
                    Some(n) => {
                        row[j] = 0.75;
                        row[n] = 0.25;
                    }
                    None => row[j] = 1.0,
                }
            }
        }
        for m in 0..RING {
            regressor[j * nv + base + m] = 1.0 / RING as f32;
        }
        let at = |ring: usize, m: usize| (base + ring * RING + m % RING) as u32;
        for ring in 0..RINGS - 1 {
            for m in 0..RING {
                let (a, b) = (at(ring, m), at(ring, m + 1));
                let (c, d) = (at(ring + 1, m), at(ring + 1, m + 1));
                faces.push([a, b, d]);
                faces.push([a, d, c]);
            }
        }
        for m in 1..RING - 1 {
            faces.push([at(0, 0), at(0, m + 1), at(0, m)]);
            faces.push([at(RINGS - 1, 0), at(RINGS - 1, m), at(RINGS - 1, m + 1)]);
        }
    }

    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut shape_dirs = vec![0.0f32; nv * 3 * SHAPE_DIM];
    let part_offsets: Vec<[f64; 3]> = (0..NUM_JOINTS * SHAPE_DIM)
        .map(|_| std::array::from_fn(|_| 0.004 * noise.sample(&mut rng)))
        .collect();
    for v in 0..nv {
        let part = v / PART_VERTICES;
        for c in 0..3 {
            let idx = (v * 3 + c) * SHAPE_DIM;
            // 0: stature, 1: girth, rest: per-part offsets.
            shape_dirs[idx] = if c == 2 { 0.04 * template[v * 3 + 2] as f64 } else { 0.0 } as f32;
            shape_dirs[idx + 1] = (0.01 * radial[v][c]) as f32;
            for b in 2..SHAPE_DIM {
                shape_dirs[idx + b] = part_offsets[part * SHAPE_DIM + b][c] as f32;
            }
        }
    }

    let mut pose_dirs = vec![0.0f32; nv * 3 * POSE_FEATURES];
    for v in 0..nv {
        let part = v / PART_VERTICES;
        if part == 0 {
            continue;
        }
        for c in 0..3 {
            let row = (v * 3 + c) * POSE_FEATURES + 9 * (part - 1);
            for slot in &mut pose_dirs[row..row + 9] {
                *slot = (0.003 * noise.sample(&mut rng)) as f32;
            }
        }
    }

    BodyModel::from_parts(BodyModelParts {
        template_vertices: template,
        faces,
        shape_dirs,
        pose_dirs,
        joint_regressor: regressor,
        skinning_weights: skinning,
        parents: PARENTS.to_vec(),
    })
    .expect("toy model satisfies every invariant")
}

/// Procedural pose rows `[beta(10), theta(72)]`: unit-normal shapes, a
/// uniform root yaw and small Gaussian joint rotations.
pub fn toy_pose_rows(seed: u64, count: usize) -> Vec<[f32; SHAPE_DIM + 3 * NUM_JOINTS]> {
    let mut rng = rng::seeded(seed);
    let shape = Normal::new(0.0, 1.0).expect("valid");
    let joint = Normal::new(0.0, 0.25).expect("valid");
    (0..count)
        .map(|_| {
            let mut row = [0.0f32; SHAPE_DIM + 3 * NUM_JOINTS];
            for b in &mut row[..SHAPE_DIM] {
                *b = shape.sample(&mut rng) as f32;
            }
            row[SHAPE_DIM + 2] = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI) as f32;
            for t in &mut row[SHAPE_DIM + 3..] {
                *t = joint.sample(&mut rng) as f32;
            }
            row
        })
        .collect()
}
