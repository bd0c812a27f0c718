#![allow(dead_code)]

use std::f64::consts::PI;

use lhsynth::body_model::{gen_toy_model, toy_pose_rows, Vec3};
use lhsynth::io::posedb::PoseDb;
use lhsynth::lidar::{Ray, Triangle};
use lhsynth::pipeline::{GenConfig, SynthContext};
use lhsynth::rng::Stream;
use lhsynth::scene::{Placement, SceneMesh};
use rand::Rng;

/// Latitude/longitude sphere whose vertices lie exactly on the sphere.
pub fn uv_sphere(center: Vec3, radius: f64, segments: usize, rings: usize) -> SceneMesh {
    let mut vertices = vec![center + Vec3::new(0.0, 0.0, radius)];
    for r in 1..rings {
        let phi = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let lam = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(center + radius * Vec3::new(phi.sin() * lam.cos(), phi.sin() * lam.sin(), phi.cos()));
        }
    }
    vertices.push(center - Vec3::new(0.0, 0.0, radius));
    let bottom = (vertices.len() - 1) as u32;
    let at = |r: usize, s: usize| (1 + (r - 1) * segments + s % segments) as u32;
    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, at(1, s), at(1, s + 1)]);
        faces.push([bottom, at(rings - 1, s + 1), at(rings - 1, s)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            faces.push([at(r, s), at(r + 1, s), at(r + 1, s + 1)]);
            faces.push([at(r, s), at(r + 1, s + 1), at(r, s + 1)]);
        }
    }
    let n = faces.len();
    SceneMesh {
        vertices,
        faces,
        face_label: vec![0; n],
        placement: Placement::polar(center.x.hypot(center.y), center.y.atan2(center.x)),
        ground_normal: None,
    }
}

fn random_point(rng: &mut Stream, lo: f64, hi: f64) -> Vec3 {
    Vec3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi))
}

/// Random triangle soup around `(8, 0, 0)` with a few shared-edge and
/// duplicate faces mixed in.
pub fn random_soup(rng: &mut Stream, n: usize) -> Vec<Triangle> {
    let center = Vec3::new(8.0, 0.0, 0.0);
    let mut tris: Vec<Triangle> = Vec::with_capacity(n);
    while tris.len() < n {
        let a = center + random_point(rng, -2.0, 2.0);
        let t = match rng.random_range(0..10) {
            0 if !tris.is_empty() => {
                let k = rng.random_range(0..tris.len());
                tris[k]
            }
            1 if !tris.is_empty() => {
                let k = rng.random_range(0..tris.len());
                let [p, q, _] = tris[k].v;
                Triangle::new(Vec3::from(p), Vec3::from(q), a)
            }
            _ => {
                let b = a + random_point(rng, -0.5, 0.5);
                let c = a + random_point(rng, -0.5, 0.5);
                Triangle::new(a, b, c)
            }
        };
        tris.push(t);
    }
    tris
}

/// Rays from the origin or random origins, aimed at random points near the soup.
pub fn random_ray(rng: &mut Stream) -> Ray {
    let origin = if rng.random_bool(0.5) {
        [0.0; 3]
    } else {
        random_point(rng, -3.0, 3.0).into()
    };
    let target = Vec3::new(8.0, 0.0, 0.0) + random_point(rng, -2.5, 2.5);
    let d = (target - Vec3::from(origin)).normalize();
    Ray::new(origin, d.into())
}

pub fn toy_poses(count: usize) -> PoseDb {
    PoseDb::from_rows(toy_pose_rows(11, count)).unwrap()
}

pub fn toy_context(cfg: GenConfig) -> SynthContext {
    SynthContext::new(cfg, gen_toy_model(0), toy_poses(256), "toy-body".into(), "toy-poses".into()).unwrap()
}
