//! Bounding volume hierarchy over triangles, built with a binned surface-area
//! heuristic. The renderer spends most of its time here.

use alloc::vec::Vec;

use crate::math::Vec3;

#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb { min: Vec3::splat(f64::INFINITY), max: Vec3::splat(f64::NEG_INFINITY) }
    }

    pub fn grow_point(&mut self, p: Vec3) {
        self.min = self.min.min_elem(p);
        self.max = self.max.max_elem(p);
    }

    pub fn grow_aabb(&mut self, o: &Aabb) {
        self.min = self.min.min_elem(o.min);
        self.max = self.max.max_elem(o.max);
    }

    pub fn surface_area(&self) -> f64 {
        if self.min.x > self.max.x {
            return 0.0;
        }
        let d = self.max - self.min;
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Slab test against a ray with precomputed inverse direction.
    #[inline]
    pub fn hit(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> bool {
        let t0 = (self.min - origin).mul_elem(inv_dir);
        let t1 = (self.max - origin).mul_elem(inv_dir);
        let t_near = t0.min_elem(t1).max_component().max(0.0);
        let t_far = t0.max_elem(t1).min_component().min(t_max);
        t_near <= t_far
    }
}

#[derive(Clone, Debug)]
struct Node {
    aabb: Aabb,
    /// Leaf: first index into `order`. Internal: index of the left child
    /// (right child follows at +1).
    first: u32,
    /// Leaf: triangle count. Internal: 0.
    count: u32,
}

pub struct Triangle {
    pub a: Vec3,
    pub edge1: Vec3,
    pub edge2: Vec3,
}

/// Closest-hit record.
#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub face: u32,
    pub t: f64,
}

pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    triangles: Vec<Triangle>,
}

const MAX_LEAF: usize = 4;
const BINS: usize = 12;

impl Bvh {
    pub fn build(vertices: &[Vec3], faces: &[[u32; 3]]) -> Bvh {
        let triangles: Vec<Triangle> = faces
            .iter()
            .map(|f| {
                let a = vertices[f[0] as usize];
                let b = vertices[f[1] as usize];
                let c = vertices[f[2] as usize];
                Triangle { a, edge1: b - a, edge2: c - a }
            })
            .collect();
        let aabbs: Vec<Aabb> = faces
            .iter()
            .map(|f| {
                let mut bb = Aabb::empty();
                for &v in f {
                    bb.grow_point(vertices[v as usize]);
                }
                bb
            })
            .collect();
        let centroids: Vec<Vec3> = aabbs.iter().map(|b| b.centroid()).collect();

        let mut order: Vec<u32> = (0..faces.len() as u32).collect();
        let mut nodes = Vec::new();
        if !faces.is_empty() {
            let n = faces.len();
            nodes.push(Node { aabb: Aabb::empty(), first: 0, count: 0 });
            build_into(&mut nodes, 0, &mut order, 0, n, &aabbs, &centroids);
        }
        Bvh { nodes, order, triangles }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Closest intersection with t in (t_min, t_max).
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<Hit> = None;
        let mut limit = t_max;
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if !node.aabb.hit(origin, inv_dir, limit) {
                continue;
            }
            if node.count > 0 {
                for i in node.first..node.first + node.count {
                    let face = self.order[i as usize];
                    let tri = &self.triangles[face as usize];
                    if let Some(t) = intersect_triangle(tri, origin, dir, t_min, limit) {
                        limit = t;
                        best = Some(Hit { face, t });
                    }
                }
            } else {
                stack[top] = node.first;
                stack[top + 1] = node.first + 1;
                top += 2;
            }
        }
        best
    }

    /// True when any triangle blocks the segment (t_min, t_max).
    pub fn occluded(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if !node.aabb.hit(origin, inv_dir, t_max) {
                continue;
            }
            if node.count > 0 {
                for i in node.first..node.first + node.count {
                    let face = self.order[i as usize];
                    let tri = &self.triangles[face as usize];
                    if intersect_triangle(tri, origin, dir, t_min, t_max).is_some() {
                        return true;
                    }
                }
            } else {
                stack[top] = node.first;
                stack[top + 1] = node.first + 1;
                top += 2;
            }
        }
        false
    }
}

/// Moller-Trumbore.
#[inline]
fn intersect_triangle(tri: &Triangle, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
    let p = dir.cross(tri.edge2);
    let det = tri.edge1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - tri.a;
    let u = tvec.dot(p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = tvec.cross(tri.edge1);
    let v = dir.dot(q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = tri.edge2.dot(q) * inv_det;
    if t <= t_min || t >= t_max {
        return None;
    }
    Some(t)
}

/// Fills `slot` with the node covering `order[start..start + count]`,
/// appending any children directly after one another so a parent can address
/// them as `first` and `first + 1`.
fn build_into(
    nodes: &mut Vec<Node>,
    slot: usize,
    order: &mut [u32],
    start: usize,
    count: usize,
    aabbs: &[Aabb],
    centroids: &[Vec3],
) {
    let mut aabb = Aabb::empty();
    let mut cbox = Aabb::empty();
    for &f in &order[start..start + count] {
        aabb.grow_aabb(&aabbs[f as usize]);
        cbox.grow_point(centroids[f as usize]);
    }

    if count <= MAX_LEAF {
        nodes[slot] = Node { aabb, first: start as u32, count: count as u32 };
        return;
    }

    // Binned SAH over the widest centroid axis.
    let extent = cbox.max - cbox.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let axis_val = |v: Vec3| match axis {
        0 => v.x,
        1 => v.y,
        _ => v.z,
    };
    let lo = axis_val(cbox.min);
    let hi = axis_val(cbox.max);

    let mut split_at = None;
    if hi > lo {
        let mut bin_aabbs = [Aabb::empty(); BINS];
        let mut bin_counts = [0usize; BINS];
        let scale = BINS as f64 / (hi - lo);
        let bin_of = |f: u32| {
            (((axis_val(centroids[f as usize]) - lo) * scale) as usize).min(BINS - 1)
        };
        for &f in &order[start..start + count] {
            let b = bin_of(f);
            bin_counts[b] += 1;
            bin_aabbs[b].grow_aabb(&aabbs[f as usize]);
        }
        // Sweep: cost of splitting after bin i.
        let mut best_cost = f64::INFINITY;
        let mut best_bin = 0usize;
        for split in 1..BINS {
            let mut left = Aabb::empty();
            let mut right = Aabb::empty();
            let mut n_left = 0usize;
            let mut n_right = 0usize;
            for b in 0..split {
                if bin_counts[b] > 0 {
                    left.grow_aabb(&bin_aabbs[b]);
                    n_left += bin_counts[b];
                }
            }
            for b in split..BINS {
                if bin_counts[b] > 0 {
                    right.grow_aabb(&bin_aabbs[b]);
                    n_right += bin_counts[b];
                }
            }
            if n_left == 0 || n_right == 0 {
                continue;
            }
            let cost = left.surface_area() * n_left as f64 + right.surface_area() * n_right as f64;
            if cost < best_cost {
                best_cost = cost;
                best_bin = split;
            }
        }
        if best_cost.is_finite() {
            // Partition in place by bin index, preserving determinism.
            let slice = &mut order[start..start + count];
            slice.sort_unstable_by(|&a, &b| {
                bin_of(a).cmp(&bin_of(b)).then(a.cmp(&b))
            });
            let mid = slice.iter().position(|&f| bin_of(f) >= best_bin).unwrap();
            if mid > 0 && mid < count {
                split_at = Some(mid);
            }
        }
    }
    // Degenerate centroids: split down the middle.
    let mid = split_at.unwrap_or(count / 2);

    let left_slot = nodes.len();
    nodes.push(Node { aabb: Aabb::empty(), first: 0, count: 0 });
    nodes.push(Node { aabb: Aabb::empty(), first: 0, count: 0 });
    nodes[slot] = Node { aabb, first: left_slot as u32, count: 0 };
    build_into(nodes, left_slot, order, start, mid, aabbs, centroids);
    build_into(nodes, left_slot + 1, order, start + mid, count - mid, aabbs, centroids);
}
