//! Simulated spinning LiDAR: laser grid, effective angular window and
//! closest-hit ray casting against a scene mesh.

pub mod bvh;
pub mod intersect;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::body_model::Vec3;
use crate::error::{Error, Result};
use crate::scene::SceneMesh;

pub use bvh::Bvh;
pub use intersect::{brute_force_closest_hit, triangles, Hit, Ray, Triangle, T_MIN};

/// Sensor geometry. Angles in degrees for readable configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaserGridConfig {
    pub n_azimuth: usize,
    pub n_elevation: usize,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    /// Extra grid columns on each side of the effective window.
    pub azimuth_margin: usize,
    /// Extra grid rows above and below the effective window.
    pub elevation_margin: usize,
}

impl Default for LaserGridConfig {
    fn default() -> Self {
        Self {
            n_azimuth: 2650,
            n_elevation: 64,
            elevation_min_deg: -25.0,
            elevation_max_deg: 15.0,
            azimuth_margin: 0,
            elevation_margin: 1,
        }
    }
}

/// Azimuths `-pi + i * 2pi / N_az` and elevations evenly spaced over
/// `[min, max]`, with cached trig tables.
#[derive(Debug, Clone)]
pub struct LaserGrid {
    config: LaserGridConfig,
    az_step: f64,
    el_min: f64,
    el_step: f64,
    az_sin_cos: Vec<(f64, f64)>,
    el_sin_cos: Vec<(f64, f64)>,
}

impl LaserGrid {
    pub fn new(config: LaserGridConfig) -> Result<Self> {
        if config.n_azimuth < 8 || config.n_elevation < 2 {
            return Err(Error::Input(format!(
                "laser grid needs >= 8 azimuths and >= 2 elevations, got {}x{}",
                config.n_azimuth, config.n_elevation
            )));
        }
        let (lo, hi) = (config.elevation_min_deg, config.elevation_max_deg);
        if !(lo < hi && lo > -90.0 && hi < 90.0) {
            return Err(Error::Input(format!("invalid elevation span [{lo}, {hi}] degrees")));
        }
        let az_step = 2.0 * PI / config.n_azimuth as f64;
        let el_min = lo.to_radians();
        let el_step = (hi.to_radians() - el_min) / (config.n_elevation - 1) as f64;
        let az_sin_cos = (0..config.n_azimuth)
            .map(|i| (-PI + i as f64 * az_step).sin_cos())
            .collect();
        let el_sin_cos = (0..config.n_elevation)
            .map(|j| (el_min + j as f64 * el_step).sin_cos())
            .collect();
        Ok(Self {
            config,
            az_step,
            el_min,
            el_step,
            az_sin_cos,
            el_sin_cos,
        })
    }

    pub fn config(&self) -> &LaserGridConfig {
        &self.config
    }

    pub fn n_azimuth(&self) -> usize {
        self.config.n_azimuth
    }

    pub fn n_elevation(&self) -> usize {
        self.config.n_elevation
    }

    pub fn azimuth(&self, i: usize) -> f64 {
        -PI + i as f64 * self.az_step
    }

    pub fn elevation(&self, j: usize) -> f64 {
        self.el_min + j as f64 * self.el_step
    }

    pub fn azimuth_step(&self) -> f64 {
        self.az_step
    }

    /// Unit beam direction of cell `(i, j)`.
    pub fn direction(&self, i: usize, j: usize) -> [f64; 3] {
        let (sa, ca) = self.az_sin_cos[i];
        let (se, ce) = self.el_sin_cos[j];
        [ce * ca, ce * sa, se]
    }
}

impl Default for LaserGrid {
    fn default() -> Self {
        Self::new(LaserGridConfig::default()).expect("default grid is valid")
    }
}

/// Grid-aligned angular rectangle; columns may wrap past the last azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectiveWindow {
    pub az_start: usize,
    pub az_count: usize,
    pub el_start: usize,
    pub el_count: usize,
    pub n_azimuth: usize,
}

impl EffectiveWindow {
    pub fn is_empty(&self) -> bool {
        self.az_count == 0 || self.el_count == 0
    }

    pub fn wraps(&self) -> bool {
        self.az_start + self.az_count > self.n_azimuth
    }

    pub fn width(&self) -> usize {
        self.az_count
    }

    pub fn height(&self) -> usize {
        self.el_count
    }

    pub fn num_rays(&self) -> usize {
        self.az_count * self.el_count
    }

    /// Grid column of local column `c`.
    pub fn column(&self, c: usize) -> usize {
        (self.az_start + c) % self.n_azimuth
    }

    /// Window-local `(column, row)` of grid cell `(i, j)`, if inside.
    pub fn local(&self, i: usize, j: usize) -> Option<(usize, usize)> {
        let c = (i + self.n_azimuth - self.az_start % self.n_azimuth) % self.n_azimuth;
        let r = j.checked_sub(self.el_start)?;
        (c < self.az_count && r < self.el_count).then_some((c, r))
    }

    /// Grid cells `(i, j)` ordered row-major: elevation outer, window column inner.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.el_count).flat_map(move |r| {
            (0..self.az_count).map(move |c| (self.column(c), self.el_start + r))
        })
    }

    pub fn rays(&self) -> Vec<(u32, u32)> {
        self.cells().map(|(i, j)| (i as u32, j as u32)).collect()
    }
}

/// Wrap an angle into `(-pi, pi]`.
fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Grid indices covered by the real interval `[lo, hi]` (in index units), as
/// an inclusive range. Boundary indices are included; an interval that falls
/// between two indices selects the nearest one.
fn covered(lo: f64, hi: f64) -> (i64, i64) {
    const TOL: f64 = 1e-9;
    let a = (lo - TOL).ceil() as i64;
    let b = (hi + TOL).floor() as i64;
    if a <= b {
        (a, b)
    } else {
        let mid = (0.5 * (lo + hi)).round() as i64;
        (mid, mid)
    }
}

/// Azimuth/elevation window covering every vertex of the scene.
///
/// Azimuths are measured relative to the scene's mean bearing so that scenes
/// straddling +-pi produce a narrow window.
pub fn effective_window(grid: &LaserGrid, scene: &SceneMesh) -> Result<EffectiveWindow> {
    window_for_points(grid, &scene.vertices)
}

pub fn window_for_points(grid: &LaserGrid, points: &[Vec3]) -> Result<EffectiveWindow> {
    if points.is_empty() {
        return Err(Error::Input("scene has no vertices".into()));
    }
    let n_az = grid.n_azimuth();
    let mut sum_s = 0.0;
    let mut sum_c = 0.0;
    let mut el_lo = f64::INFINITY;
    let mut el_hi = f64::NEG_INFINITY;
    for p in points {
        let horiz = p.x.hypot(p.y);
        if horiz == 0.0 && p.z == 0.0 {
            return Err(Error::Degenerate("scene vertex coincides with the sensor origin".into()));
        }
        if horiz > 0.0 {
            sum_s += p.y / horiz;
            sum_c += p.x / horiz;
        }
        let el = p.z.atan2(horiz);
        el_lo = el_lo.min(el);
        el_hi = el_hi.max(el);
    }

    let full = (0usize, n_az);
    let (az_start, az_count) = if sum_s.hypot(sum_c) < 1e-9 * points.len() as f64 {
        full
    } else {
        let mean = sum_s.atan2(sum_c);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in points {
            if p.x == 0.0 && p.y == 0.0 {
                continue;
            }
            let rel = wrap(p.y.atan2(p.x) - mean);
            lo = lo.min(rel);
            hi = hi.max(rel);
        }
        let to_index = |a: f64| (mean + a + PI) / grid.azimuth_step();
        let (a, b) = covered(to_index(lo), to_index(hi));
        let m = grid.config().azimuth_margin as i64;
        let (a, b) = (a - m, b + m);
        let count = (b - a + 1) as usize;
        if count >= n_az {
            full
        } else {
            (a.rem_euclid(n_az as i64) as usize, count)
        }
    };

    let to_row = |e: f64| (e - grid.el_min) / grid.el_step;
    let (a, b) = covered(to_row(el_lo), to_row(el_hi));
    let m = grid.config().elevation_margin as i64;
    let a = (a - m).max(0);
    let b = (b + m).min(grid.n_elevation() as i64 - 1);
    let (el_start, el_count) = if a <= b {
        (a as usize, (b - a + 1) as usize)
    } else {
        (0, 0)
    };
    Ok(EffectiveWindow {
        az_start,
        az_count,
        el_start,
        el_count,
        n_azimuth: n_az,
    })
}

/// Labelled ray-cast returns, one per hitting ray, in window cell order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HitCloud {
    pub points: Vec<Vec3>,
    pub hit_face: Vec<u32>,
    pub ray_cell: Vec<(u32, u32)>,
    pub labels: Vec<u16>,
    /// Rays traced to produce this cloud.
    pub rays_cast: usize,
}

/// `hit_face` of points that did not come from a ray (noise, imports).
pub const NO_FACE: u32 = u32::MAX;
/// `ray_cell` of points that did not come from a ray.
pub const NO_CELL: (u32, u32) = (u32::MAX, u32::MAX);

impl HitCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One-hot segmentation rows of width `classes`.
    pub fn one_hot(&self, classes: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.labels.len() * classes];
        for (i, l) in self.labels.iter().enumerate() {
            out[i * classes + *l as usize] = 1.0;
        }
        out
    }

    /// Keep points where `keep[i]` is true, preserving order.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> HitCloud {
        let mut out = HitCloud {
            rays_cast: self.rays_cast,
            ..Default::default()
        };
        for i in (0..self.len()).filter(|&i| keep(i)) {
            out.points.push(self.points[i]);
            out.hit_face.push(self.hit_face[i]);
            out.ray_cell.push(self.ray_cell[i]);
            out.labels.push(self.labels[i]);
        }
        out
    }
}

/// Scene triangles plus their hierarchy, built once per scene.
pub struct SceneAccel {
    pub triangles: Vec<Triangle>,
    pub bvh: Bvh,
}

impl SceneAccel {
    pub fn build(scene: &SceneMesh) -> Self {
        let triangles = triangles(&scene.vertices, &scene.faces);
        let bvh = Bvh::build(&triangles);
        Self { triangles, bvh }
    }
}

/// Casts every ray of `window` from the origin; misses are dropped.
pub fn raycast(grid: &LaserGrid, scene: &SceneMesh, window: &EffectiveWindow) -> HitCloud {
    raycast_cells(grid, scene, window, |_, _| true)
}

/// Casts only the rays of grid cells `(i, j)` accepted by `cast`.
pub fn raycast_cells(
    grid: &LaserGrid,
    scene: &SceneMesh,
    window: &EffectiveWindow,
    cast: impl Fn(usize, usize) -> bool,
) -> HitCloud {
    let accel = SceneAccel::build(scene);
    raycast_with(grid, scene, &accel, window, cast, |accel, ray| accel.bvh.closest_hit(ray))
}

/// Reference cast that tests every triangle for every ray.
pub fn raycast_brute_force(grid: &LaserGrid, scene: &SceneMesh, window: &EffectiveWindow) -> HitCloud {
    let accel = SceneAccel::build(scene);
    raycast_with(grid, scene, &accel, window, |_, _| true, |accel, ray| {
        brute_force_closest_hit(&accel.triangles, ray)
    })
}

fn raycast_with(
    grid: &LaserGrid,
    scene: &SceneMesh,
    accel: &SceneAccel,
    window: &EffectiveWindow,
    cast: impl Fn(usize, usize) -> bool,
    closest: impl Fn(&SceneAccel, &Ray) -> Option<Hit>,
) -> HitCloud {
    let mut cloud = HitCloud::default();
    for (i, j) in window.cells().filter(|&(i, j)| cast(i, j)) {
        cloud.rays_cast += 1;
        let ray = Ray::new([0.0; 3], grid.direction(i, j));
        if let Some(hit) = closest(accel, &ray) {
            cloud.points.push(ray.at(hit.t));
            cloud.hit_face.push(hit.face);
            cloud.ray_cell.push((i as u32, j as u32));
            cloud.labels.push(scene.face_label[hit.face as usize]);
        }
    }
    cloud
}

/// Largest distance from any point to the plane of its hit face.
pub fn max_plane_residual(scene: &SceneMesh, cloud: &HitCloud) -> f64 {
    cloud
        .points
        .iter()
        .zip(&cloud.hit_face)
        .filter(|(_, f)| **f != NO_FACE)
        .map(|(p, f)| {
            let n = scene.face_normal(*f as usize);
            let a = scene.vertices[scene.faces[*f as usize][0] as usize];
            n.dot(&(p - a)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Placement;

    fn scene_of(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> SceneMesh {
        let n = faces.len();
        SceneMesh {
            vertices,
            faces,
            face_label: (0..n as u16).collect(),
            placement: Placement::polar(0.0, 0.0),
            ground_normal: None,
        }
    }

    #[test]
    fn grid_defaults() {
        let g = LaserGrid::default();
        assert_eq!(g.n_azimuth(), 2650);
        assert_eq!(g.n_elevation(), 64);
        assert_eq!(g.azimuth(0), -PI);
        assert!((g.elevation(63) - 15f64.to_radians()).abs() < 1e-12);
        assert!(LaserGrid::new(LaserGridConfig { n_azimuth: 7, ..Default::default() }).is_err());
    }

    #[test]
    fn wrapped_window_is_narrow() {
        let g = LaserGrid::default();
        let pts = [179f64, -179.0]
            .iter()
            .map(|d| {
                let a = d.to_radians();
                Vec3::new(10.0 * a.cos(), 10.0 * a.sin(), 0.0)
            })
            .collect::<Vec<_>>();
        let w = window_for_points(&g, &pts).unwrap();
        assert!(w.wraps());
        let width_deg = w.az_count as f64 * g.azimuth_step().to_degrees();
        assert!((1.8..2.3).contains(&width_deg), "{width_deg}");
        for p in &pts {
            let i = (((p.y.atan2(p.x) + PI) / g.azimuth_step()).round() as usize) % g.n_azimuth();
            assert!(w.local(i, w.el_start).is_some());
        }
    }

    #[test]
    fn single_point_window() {
        let g = LaserGrid::default();
        let w = window_for_points(&g, &[Vec3::new(7.0, 1.0, -0.3)]).unwrap();
        assert_eq!(w.az_count, 1);
        assert_eq!(w.el_count, 1 + 2 * g.config().elevation_margin);
    }

    #[test]
    fn origin_vertex_is_degenerate() {
        let g = LaserGrid::default();
        let err = window_for_points(&g, &[Vec3::zeros(), Vec3::x()]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn centre_ray_hits_facing_triangle() {
        let g = LaserGrid::default();
        // Triangle at x=5 around the beam at azimuth 0 and the row nearest 0 elevation.
        let j = (0..g.n_elevation())
            .min_by(|a, b| g.elevation(*a).abs().total_cmp(&g.elevation(*b).abs()))
            .unwrap();
        let z0 = 5.0 * g.elevation(j).tan();
        let scene = scene_of(
            vec![
                Vec3::new(5.0, -0.2, z0 - 0.2),
                Vec3::new(5.0, 0.2, z0 - 0.2),
                Vec3::new(5.0, 0.0, z0 + 0.2),
            ],
            vec![[0, 1, 2]],
        );
        let w = effective_window(&g, &scene).unwrap();
        let cloud = raycast(&g, &scene, &w);
        let i0 = g.n_azimuth() / 2;
        let k = cloud.ray_cell.iter().position(|c| *c == (i0 as u32, j as u32)).unwrap();
        assert!((cloud.points[k].x - 5.0).abs() < 1e-12);
        assert!(cloud.points[k].y.abs() < 1e-12);
        assert_eq!(cloud.labels[k], 0);
        assert!(max_plane_residual(&scene, &cloud) < 1e-9);
    }
}
