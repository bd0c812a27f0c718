//! Watertight ray/triangle intersection (Woop, Benthin & Wald, 2013) and the
//! brute-force closest-hit reference.

use crate::body_model::Vec3;

/// Rays never report hits closer than this, metres.
pub const T_MIN: f64 = 1e-4;

/// Faces whose doubled area is below `DEGENERATE_EPS * longest_edge^2` are
/// never intersected.
pub const DEGENERATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: [f64; 3],
    pub dir: [f64; 3],
    pub(crate) inv: [f64; 3],
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl Ray {
    /// `dir` must be non-zero; it is used as given (unit length makes `t` a
    /// distance).
    pub fn new(origin: [f64; 3], dir: [f64; 3]) -> Self {
        let abs = dir.map(f64::abs);
        let kz = if abs[0] >= abs[1] && abs[0] >= abs[2] {
            0
        } else if abs[1] >= abs[2] {
            1
        } else {
            2
        };
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        Self {
            origin,
            dir,
            inv: dir.map(|d| 1.0 / d),
            kx,
            ky,
            kz,
            sx: dir[kx] / dir[kz],
            sy: dir[ky] / dir[kz],
            sz: 1.0 / dir[kz],
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        Vec3::new(
            self.origin[0] + t * self.dir[0],
            self.origin[1] + t * self.dir[1],
            self.origin[2] + t * self.dir[2],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub face: u32,
    pub t: f64,
}

impl Hit {
    /// Closer hit wins; equal distances go to the lower face index.
    #[inline]
    pub fn beats(&self, other: &Option<Hit>) -> bool {
        match other {
            None => true,
            Some(o) => self.t < o.t || (self.t == o.t && self.face < o.face),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub v: [[f64; 3]; 3],
    pub degenerate: bool,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        let e0 = b - a;
        let e1 = c - a;
        let e2 = c - b;
        let longest = e0.norm_squared().max(e1.norm_squared()).max(e2.norm_squared());
        let degenerate = !(e0.cross(&e1).norm() > DEGENERATE_EPS * longest);
        Self {
            v: [a.into(), b.into(), c.into()],
            degenerate,
        }
    }

    /// Distance along `ray` to the intersection, both sides counted.
    #[inline]
    pub fn intersect(&self, ray: &Ray) -> Option<f64> {
        if self.degenerate {
            return None;
        }
        let o = ray.origin;
        let (kx, ky, kz) = (ray.kx, ray.ky, ray.kz);
        let rel = |p: &[f64; 3]| [p[0] - o[0], p[1] - o[1], p[2] - o[2]];
        let a = rel(&self.v[0]);
        let b = rel(&self.v[1]);
        let c = rel(&self.v[2]);
        let ax = a[kx] - ray.sx * a[kz];
        let ay = a[ky] - ray.sy * a[kz];
        let bx = b[kx] - ray.sx * b[kz];
        let by = b[ky] - ray.sy * b[kz];
        let cx = c[kx] - ray.sx * c[kz];
        let cy = c[ky] - ray.sy * c[kz];
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let t_scaled = ray.sz * (u * a[kz] + v * b[kz] + w * c[kz]);
        let t = t_scaled / det;
        if t > T_MIN && t.is_finite() {
            Some(t)
        } else {
            None
        }
    }
}

pub fn triangles(vertices: &[Vec3], faces: &[[u32; 3]]) -> Vec<Triangle> {
    faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| vertices[i as usize]);
            Triangle::new(a, b, c)
        })
        .collect()
}

/// Tests every triangle in index order.
pub fn brute_force_closest_hit(tris: &[Triangle], ray: &Ray) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for (i, tri) in tris.iter().enumerate() {
        if let Some(t) = tri.intersect(ray) {
            let hit = Hit { face: i as u32, t };
            if hit.beats(&best) {
                best = Some(hit);
            }
        }
    }
    best
}
