//! Bounding volume hierarchy over a triangle mesh for nearest-hit ray casting.

use crate::{Point3, Vector3};

use super::mesh::TriangleMesh;

const LEAF_SIZE: usize = 4;

/// Nearest ray hit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    /// Distance along the unit direction, meters.
    pub distance: f64,
    pub triangle: u32,
}

impl RayHit {
    /// Orders hits by distance, then by triangle id.
    #[inline]
    pub fn is_closer_than(&self, other: &RayHit) -> bool {
        self.distance < other.distance || (self.distance == other.distance && self.triangle < other.triangle)
    }
}

/// Möller–Trumbore intersection. Returns the ray parameter of a hit with
/// `t > 0`, counting both triangle faces.
#[inline]
pub fn intersect_triangle(origin: &Point3, dir: &Vector3, corners: &[Point3; 3]) -> Option<f64> {
    let e1 = corners[1] - corners[0];
    let e2 = corners[2] - corners[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-18 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - corners[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

#[derive(Clone, Copy, Debug)]
struct Node {
    min: Point3,
    max: Point3,
    /// Leaf: first triangle slot. Inner: index of the right child (left is `self + 1`).
    offset: u32,
    /// Number of triangles for a leaf, 0 for an inner node.
    count: u32,
}

/// Acceleration structure over one mesh. Immutable after construction and
/// safe to query from many threads.
#[derive(Clone, Debug)]
pub struct BoundingVolumeIndex {
    mesh: TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl BoundingVolumeIndex {
    pub fn build(mesh: TriangleMesh) -> Self {
        let n = mesh.triangles.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let centroids: Vec<Point3> = (0..n)
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                Point3::from((a.coords + b.coords + c.coords) / 3.0)
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        if n > 0 {
            build_node(&mesh, &centroids, &mut order, 0, n, &mut nodes);
        }
        Self { mesh, nodes, order }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    /// Nearest hit with distance in `(0, max_range]`. `direction` must be unit length.
    pub fn cast_ray(&self, origin: &Point3, direction: &Vector3, max_range: f64) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vector3::new(1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z);
        let mut best: Option<RayHit> = None;
        let mut limit = max_range;
        let mut stack = [0u32; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if slab_entry(origin, &inv, &node.min, &node.max, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for &t in &self.order[start..start + node.count as usize] {
                    if let Some(d) = intersect_triangle(origin, direction, &self.mesh.corners(t as usize)) {
                        let hit = RayHit { distance: d, triangle: t };
                        if d <= limit && best.is_none_or(|b| hit.is_closer_than(&b)) {
                            limit = d;
                            best = Some(hit);
                        }
                    }
                }
            } else {
                let left = stack[top] + 1;
                let right = node.offset;
                let dl = self.entry_of(left, origin, &inv, limit);
                let dr = self.entry_of(right, origin, &inv, limit);
                // Push the farther child first so the nearer one is visited next.
                match (dl, dr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (left, right) } else { (right, left) };
                        stack[top] = far;
                        stack[top + 1] = near;
                        top += 2;
                    }
                    (Some(_), None) => {
                        stack[top] = left;
                        top += 1;
                    }
                    (None, Some(_)) => {
                        stack[top] = right;
                        top += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best
    }

    #[inline]
    fn entry_of(&self, node: u32, origin: &Point3, inv: &Vector3, limit: f64) -> Option<f64> {
        let n = &self.nodes[node as usize];
        slab_entry(origin, inv, &n.min, &n.max, limit)
    }
}

/// Entry parameter of the ray into a box, if the box is reached within `limit`.
/// Inclusive comparisons keep boxes that are merely touched.
#[inline]
fn slab_entry(origin: &Point3, inv: &Vector3, min: &Point3, max: &Point3, limit: f64) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = limit;
    for a in 0..3 {
        let mut near = (min[a] - origin[a]) * inv[a];
        let mut far = (max[a] - origin[a]) * inv[a];
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        // NaN arises for a zero direction component with the origin on a slab face;
        // treat it as unbounded on that axis.
        if !near.is_nan() {
            t0 = t0.max(near);
        }
        if !far.is_nan() {
            t1 = t1.min(far);
        }
        if t0 > t1 * (1.0 + 4.0 * f64::EPSILON) + 1e-12 {
            return None;
        }
    }
    Some(t0)
}

fn build_node(
    mesh: &TriangleMesh,
    centroids: &[Point3],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let (mut min, mut max) = (Point3::from([f64::INFINITY; 3]), Point3::from([f64::NEG_INFINITY; 3]));
    let (mut cmin, mut cmax) = (min, max);
    for &t in &order[start..end] {
        for c in mesh.corners(t as usize) {
            min = min.inf(&c);
            max = max.sup(&c);
        }
        let c = centroids[t as usize];
        cmin = cmin.inf(&c);
        cmax = cmax.sup(&c);
    }
    let index = nodes.len() as u32;
    nodes.push(Node { min, max, offset: start as u32, count: (end - start) as u32 });
    if end - start <= LEAF_SIZE {
        return index;
    }
    let extent = cmax - cmin;
    let axis = extent.imax();
    if extent[axis] <= 0.0 {
        return index;
    }
    let mid = start + (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis]).then(a.cmp(&b))
    });
    build_node(mesh, centroids, order, start, mid, nodes);
    let right = build_node(mesh, centroids, order, mid, end, nodes);
    nodes[index as usize].offset = right;
    nodes[index as usize].count = 0;
    index
}
