//! Binned-SAH bounding volume hierarchy over a triangle soup.

use super::intersect::{Hit, Ray, Triangle};

const LEAF_SIZE: usize = 4;
const BINS: usize = 12;
/// Node boxes are padded so rounding in the slab test never rejects a hit
/// the brute-force reference would find.
const BOX_PAD: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: [f64; 3],
    max: [f64; 3],
}

impl Aabb {
    const EMPTY: Aabb = Aabb {
        min: [f64::INFINITY; 3],
        max: [f64::NEG_INFINITY; 3],
    };

    #[inline]
    fn grow_point(&mut self, p: &[f64; 3]) {
        for k in 0..3 {
            self.min[k] = if p[k] < self.min[k] { p[k] } else { self.min[k] };
            self.max[k] = if p[k] > self.max[k] { p[k] } else { self.max[k] };
        }
    }

    #[inline]
    fn grow(&mut self, other: &Aabb) {
        for k in 0..3 {
            self.min[k] = if other.min[k] < self.min[k] { other.min[k] } else { self.min[k] };
            self.max[k] = if other.max[k] > self.max[k] { other.max[k] } else { self.max[k] };
        }
    }

    fn area(&self) -> f64 {
        let d = [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ];
        if d[0] < 0.0 {
            return 0.0;
        }
        2.0 * (d[0] * d[1] + d[1] * d[2] + d[2] * d[0])
    }

    fn padded(mut self) -> Self {
        for k in 0..3 {
            self.min[k] -= BOX_PAD;
            self.max[k] += BOX_PAD;
        }
        self
    }

    /// Entry distance, or `None` when the ray misses or enters beyond `t_max`.
    #[inline]
    fn entry(&self, ray: &Ray, t_max: f64) -> Option<f64> {
        let mut near = 0.0f64;
        let mut far = t_max;
        for k in 0..3 {
            if ray.dir[k] == 0.0 {
                if ray.origin[k] < self.min[k] || ray.origin[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            let t0 = (self.min[k] - ray.origin[k]) * ray.inv[k];
            let t1 = (self.max[k] - ray.origin[k]) * ray.inv[k];
            let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            if lo > near {
                near = lo;
            }
            if hi < far {
                far = hi;
            }
            if near > far {
                return None;
            }
        }
        Some(near)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the left child (the
    /// right child follows it).
    first: u32,
    /// Number of primitives; zero for interior nodes.
    count: u32,
}

/// Immutable acceleration structure; primitives are stored in traversal order.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    tris: Vec<Triangle>,
    face_ids: Vec<u32>,
}

struct Build {
    boxes: Vec<Aabb>,
    centroids: Vec<[f64; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn build(tris: &[Triangle]) -> Self {
        let boxes: Vec<Aabb> = tris
            .iter()
            .map(|t| {
                let mut b = Aabb::EMPTY;
                for v in &t.v {
                    b.grow_point(v);
                }
                b
            })
            .collect();
        let centroids = boxes
            .iter()
            .map(|b| std::array::from_fn(|k| 0.5 * (b.min[k] + b.max[k])))
            .collect();
        let mut build = Build {
            boxes,
            centroids,
            order: (0..tris.len() as u32).collect(),
            nodes: Vec::with_capacity(2 * tris.len().max(1)),
        };
        build.nodes.push(Node {
            bounds: Aabb::EMPTY,
            first: 0,
            count: 0,
        });
        if !tris.is_empty() {
            build.subdivide(0, 0, tris.len());
        }
        let Build { order, nodes, .. } = build;
        Self {
            nodes,
            tris: order.iter().map(|&i| tris[i as usize]).collect(),
            face_ids: order,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Closest hit with the same tie rule as the brute-force reference.
    pub fn closest_hit(&self, ray: &Ray) -> Option<Hit> {
        if self.tris.is_empty() {
            return None;
        }
        let mut best: Option<Hit> = None;
        let mut t_max = f64::INFINITY;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        self.nodes[0].bounds.entry(ray, t_max)?;
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if n.count > 0 {
                let range = n.first as usize..(n.first + n.count) as usize;
                for (tri, &face) in self.tris[range.clone()].iter().zip(&self.face_ids[range]) {
                    if let Some(t) = tri.intersect(ray) {
                        let hit = Hit { face, t };
                        if hit.beats(&best) {
                            best = Some(hit);
                            t_max = t;
                        }
                    }
                }
            } else {
                let left = n.first as usize;
                let right = left + 1;
                let tl = self.nodes[left].bounds.entry(ray, t_max);
                let tr = self.nodes[right].bounds.entry(ray, t_max);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (left, right) } else { (right, left) };
                        stack[sp] = far as u32;
                        sp += 1;
                        node = near;
                        continue;
                    }
                    (Some(_), None) => {
                        node = left;
                        continue;
                    }
                    (None, Some(_)) => {
                        node = right;
                        continue;
                    }
                    (None, None) => {}
                }
            }
            // Pop, skipping subtrees that now start beyond the best hit.
            loop {
                if sp == 0 {
                    return best;
                }
                sp -= 1;
                let candidate = stack[sp] as usize;
                if self.nodes[candidate].bounds.entry(ray, t_max).is_some() {
                    node = candidate;
                    break;
                }
            }
        }
    }
}

impl Build {
    fn bounds_of(&self, start: usize, end: usize) -> (Aabb, Aabb) {
        let mut b = Aabb::EMPTY;
        let mut c = Aabb::EMPTY;
        for &i in &self.order[start..end] {
            b.grow(&self.boxes[i as usize]);
            c.grow_point(&self.centroids[i as usize]);
        }
        (b, c)
    }

    fn subdivide(&mut self, node: usize, start: usize, end: usize) {
        let (bounds, cbounds) = self.bounds_of(start, end);
        self.nodes[node].bounds = bounds.padded();
        let count = end - start;
        let make_leaf = |nodes: &mut Vec<Node>| {
            nodes[node].first = start as u32;
            nodes[node].count = count as u32;
        };
        if count <= LEAF_SIZE {
            make_leaf(&mut self.nodes);
            return;
        }
        let Some((axis, split)) = self.best_split(start, end, &bounds, &cbounds) else {
            make_leaf(&mut self.nodes);
            return;
        };
        let centroids = &self.centroids;
        let slice = &mut self.order[start..end];
        let mut mid = 0;
        for i in 0..slice.len() {
            if centroids[slice[i] as usize][axis] < split {
                slice.swap(i, mid);
                mid += 1;
            }
        }
        if mid == 0 || mid == count {
            // All centroids coincide on this axis: fall back to a median split.
            slice.sort_by(|a, b| {
                centroids[*a as usize][axis].total_cmp(&centroids[*b as usize][axis]).then(a.cmp(b))
            });
            mid = count / 2;
        }
        let left = self.nodes.len();
        let blank = Node {
            bounds: Aabb::EMPTY,
            first: 0,
            count: 0,
        };
        self.nodes.push(blank);
        self.nodes.push(blank);
        self.nodes[node].first = left as u32;
        self.nodes[node].count = 0;
        self.subdivide(left, start, start + mid);
        self.subdivide(left + 1, start + mid, end);
    }

    /// Binned SAH along the longest centroid axis; returns `None` when no split beats a leaf.
    fn best_split(&self, start: usize, end: usize, bounds: &Aabb, cbounds: &Aabb) -> Option<(usize, f64)> {
        let count = end - start;
        let mut best: Option<(f64, usize, f64)> = None;
        let extent_of = |k: usize| cbounds.max[k] - cbounds.min[k];
        let longest = (0..3).fold(0, |a, k| if extent_of(k) > extent_of(a) { k } else { a });
        for axis in [longest] {
            let lo = cbounds.min[axis];
            let extent = cbounds.max[axis] - lo;
            if !(extent > 0.0) {
                continue;
            }
            let mut bins = [(Aabb::EMPTY, 0usize); BINS];
            let scale = BINS as f64 / extent;
            for &i in &self.order[start..end] {
                let b = (((self.centroids[i as usize][axis] - lo) * scale) as usize).min(BINS - 1);
                bins[b].0.grow(&self.boxes[i as usize]);
                bins[b].1 += 1;
            }
            let mut right_area = [0.0; BINS];
            let mut right_count = [0usize; BINS];
            let mut acc = Aabb::EMPTY;
            let mut n = 0;
            for b in (1..BINS).rev() {
                acc.grow(&bins[b].0);
                n += bins[b].1;
                right_area[b] = acc.area();
                right_count[b] = n;
            }
            let mut acc = Aabb::EMPTY;
            let mut n = 0;
            for b in 0..BINS - 1 {
                acc.grow(&bins[b].0);
                n += bins[b].1;
                if n == 0 || right_count[b + 1] == 0 {
                    continue;
                }
                let cost = acc.area() * n as f64 + right_area[b + 1] * right_count[b + 1] as f64;
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, axis, lo + (b + 1) as f64 / scale));
                }
            }
        }
        let (cost, axis, split) = best?;
        let leaf_cost = bounds.area() * count as f64;
        if count > 4 * LEAF_SIZE || cost < leaf_cost {
            Some((axis, split))
        } else {
            None
        }
    }
}
