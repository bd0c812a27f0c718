//! Scene assembly: posed body + tilted ground quad, placed at a random polar
//! position around the sensor.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body_model::{PosedBody, Vec3, NUM_JOINTS};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Face label of ground triangles (one past the last joint).
pub const GROUND_LABEL: u16 = NUM_JOINTS as u16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    /// Placement distance range, metres.
    pub r_range: [f64; 2],
    /// Ground quad side length, metres.
    pub ground_size: f64,
    /// Half-angle of the cone the ground normal is drawn from, radians.
    pub ground_max_tilt: f64,
    /// Ground height is offset by Uniform(-j, j) metres.
    pub ground_height_jitter: f64,
    pub ground_enabled: bool,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            r_range: [4.0, 20.0],
            ground_size: 4.0,
            ground_max_tilt: 0.175,
            ground_height_jitter: 0.0,
            ground_enabled: true,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.r_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Input(format!("invalid r_range [{lo}, {hi}]")));
        }
        if !(self.ground_max_tilt >= 0.0 && self.ground_max_tilt < PI / 4.0) {
            return Err(Error::Input(format!(
                "ground_max_tilt {} must be in [0, pi/4)",
                self.ground_max_tilt
            )));
        }
        if !(self.ground_size > 0.0 && self.ground_height_jitter >= 0.0) {
            return Err(Error::Input("ground size must be positive, jitter non-negative".into()));
        }
        Ok(())
    }

    pub fn stream(&self) -> Stream {
        rng::seeded(self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub r: f64,
    pub azimuth: f64,
    pub translation: [f64; 3],
}

impl Placement {
    pub fn polar(r: f64, azimuth: f64) -> Self {
        Self {
            r,
            azimuth,
            translation: [r * azimuth.cos(), r * azimuth.sin(), 0.0],
        }
    }
}

/// Square ground patch in the body frame, before placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Ground {
    pub corners: [Vec3; 4],
    pub normal: Vec3,
    pub center: Vec3,
}

impl Ground {
    pub const FACES: [[u32; 3]; 2] = [[0, 1, 2], [0, 2, 3]];
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub face_label: Vec<u16>,
    pub placement: Placement,
    pub ground_normal: Option<Vec3>,
}

impl SceneMesh {
    pub fn num_body_faces(&self) -> usize {
        self.faces.len() - if self.ground_normal.is_some() { 2 } else { 0 }
    }

    /// Unit normal of face `f` (zero for degenerate faces).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f].map(|i| self.vertices[i as usize]);
        (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }
}

/// Body vertex with minimum Z (lowest index on ties).
fn lowest_vertex(body: &PosedBody) -> Result<Vec3> {
    body.vertices
        .iter()
        .copied()
        .reduce(|a, b| if b.z < a.z { b } else { a })
        .ok_or_else(|| Error::Input("posed body has no vertices".into()))
}

/// Ground quad centred under the body's lowest vertex, normal drawn uniformly
/// from the spherical cap of half-angle `ground_max_tilt` around +Z.
pub fn make_ground(body: &PosedBody, cfg: &SceneConfig, rng: &mut Stream) -> Result<Ground> {
    let mut center = lowest_vertex(body)?;
    let cos_tilt: f64 = if cfg.ground_max_tilt > 0.0 {
        rng.random_range(cfg.ground_max_tilt.cos()..=1.0)
    } else {
        1.0
    };
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    if cfg.ground_height_jitter > 0.0 {
        center.z += rng.random_range(-cfg.ground_height_jitter..=cfg.ground_height_jitter);
    }
    let sin_tilt = (1.0 - cos_tilt * cos_tilt).max(0.0).sqrt();
    let normal = Vec3::new(sin_tilt * phi.cos(), sin_tilt * phi.sin(), cos_tilt);
    let u = (Vec3::x() - normal * normal.x).normalize();
    let w = normal.cross(&u);
    let h = cfg.ground_size / 2.0;
    let corners = [
        center - u * h - w * h,
        center + u * h - w * h,
        center + u * h + w * h,
        center - u * h + w * h,
    ];
    Ok(Ground {
        corners,
        normal,
        center,
    })
}

/// Translate body (and ground) to the polar placement.
pub fn assemble_scene(body: &PosedBody, ground: Option<&Ground>, placement: Placement) -> SceneMesh {
    let t = Vec3::from(placement.translation);
    let n_body = body.vertices.len() as u32;
    let mut vertices: Vec<Vec3> = body.vertices.iter().map(|v| v + t).collect();
    let mut faces = body.faces.clone();
    let mut face_label = body.face_joint_label.clone();
    if let Some(g) = ground {
        vertices.extend(g.corners.iter().map(|v| v + t));
        faces.extend(Ground::FACES.iter().map(|f| f.map(|i| i + n_body)));
        face_label.extend([GROUND_LABEL; 2]);
    }
    SceneMesh {
        vertices,
        faces,
        face_label,
        placement,
        ground_normal: ground.map(|g| g.normal),
    }
}

/// Samples ground (if enabled), then `r ~ U(r_range)` and `azimuth ~ U[-pi, pi)`.
pub fn place_scene(body: &PosedBody, cfg: &SceneConfig, rng: &mut Stream) -> Result<SceneMesh> {
    let ground = if cfg.ground_enabled {
        Some(make_ground(body, cfg, rng)?)
    } else {
        None
    };
    let [lo, hi] = cfg.r_range;
    let r = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let azimuth = rng.random_range(-PI..PI);
    Ok(assemble_scene(body, ground.as_ref(), Placement::polar(r, azimuth)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{forward, gen_toy_model};

    fn body() -> PosedBody {
        forward(&gen_toy_model(0), &[0.0; 10], &[0.0; 72]).unwrap()
    }

    #[test]
    fn flat_ground_sits_at_lowest_vertex() {
        let b = body();
        let cfg = SceneConfig {
            ground_max_tilt: 0.0,
            ..Default::default()
        };
        let g = make_ground(&b, &cfg, &mut rng::seeded(1)).unwrap();
        assert_eq!(g.normal, Vec3::new(0.0, 0.0, 1.0));
        let min_z = b.vertices.iter().map(|v| v.z).fold(f64::INFINITY, f64::min);
        for c in &g.corners {
            assert_eq!(c.z, min_z);
        }
    }

    #[test]
    fn tilted_ground_is_a_planar_square() {
        let b = body();
        let cfg = SceneConfig::default();
        let mut s = rng::seeded(9);
        for _ in 0..200 {
            let g = make_ground(&b, &cfg, &mut s).unwrap();
            assert!(g.normal.z >= cfg.ground_max_tilt.cos() - 1e-12);
            for i in 0..4 {
                let edge = (g.corners[(i + 1) % 4] - g.corners[i]).norm();
                assert!((edge - 4.0).abs() < 1e-9);
                assert!(g.normal.dot(&(g.corners[i] - g.center)).abs() < 1e-9);
            }
            let n0 = (g.corners[1] - g.corners[0]).cross(&(g.corners[2] - g.corners[0]));
            assert!(n0.normalize().dot(&g.normal) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn forced_placement_translates() {
        let b = body();
        let scene = assemble_scene(&b, None, Placement::polar(10.0, 0.0));
        let mean = |vs: &[Vec3]| vs.iter().sum::<Vec3>() / vs.len() as f64;
        let before = mean(&b.vertices);
        let after = mean(&scene.vertices);
        assert!((after.x - before.x - 10.0).abs() < 1e-9);
        assert!((after.y - before.y).abs() < 1e-12);
        assert_eq!(scene.faces.len(), b.faces.len());
        assert!(scene.face_label.iter().all(|l| *l < GROUND_LABEL));
    }

    #[test]
    fn placement_preserves_geometry_and_labels() {
        let b = body();
        let cfg = SceneConfig::default();
        let scene = place_scene(&b, &cfg, &mut rng::seeded(4)).unwrap();
        assert_eq!(scene.faces.len(), b.faces.len() + 2);
        assert_eq!(&scene.face_label[..b.faces.len()], &b.face_joint_label[..]);
        assert_eq!(&scene.face_label[b.faces.len()..], &[GROUND_LABEL; 2]);
        for (i, j) in [(0usize, 100usize), (5, 431), (17, 300)] {
            let d0 = (b.vertices[i] - b.vertices[j]).norm();
            let d1 = (scene.vertices[i] - scene.vertices[j]).norm();
            assert!((d0 - d1).abs() < 1e-9);
        }
        let p = scene.placement;
        assert!((4.0..=20.0).contains(&p.r));
        assert!((-PI..PI).contains(&p.azimuth));
        assert_eq!(p.translation[2], 0.0);
    }

    #[test]
    fn disabled_ground_adds_nothing() {
        let b = body();
        let cfg = SceneConfig {
            ground_enabled: false,
            ..Default::default()
        };
        let scene = place_scene(&b, &cfg, &mut rng::seeded(4)).unwrap();
        assert_eq!(scene.faces.len(), b.faces.len());
        assert!(scene.ground_normal.is_none());
    }
}
