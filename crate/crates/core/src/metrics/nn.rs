//! Nearest-neighbour structures for cloud comparison.

use rustc_hash::FxHashMap;

use crate::Point3;

const LEAF: usize = 8;

/// Static k-d tree answering exact nearest-neighbour distance queries.
/// Points are stored in leaf order.
pub struct KdTree {
    points: Vec<Point3>,
    nodes: Vec<KdNode>,
}

#[derive(Clone, Copy)]
enum KdNode {
    Leaf { start: u32, end: u32 },
    Split { axis: u8, value: f64, right: u32 },
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut points = points.to_vec();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF + 1);
        if !points.is_empty() {
            let n = points.len();
            build(&mut points, 0, n, &mut nodes);
        }
        Self { points, nodes }
    }

    /// Euclidean distance from `q` to its nearest point; infinity for an empty tree.
    pub fn nearest_distance(&self, q: &Point3) -> f64 {
        if self.nodes.is_empty() {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        self.search(0, q, &mut best);
        best.sqrt()
    }

    fn search(&self, node: usize, q: &Point3, best: &mut f64) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                for p in &self.points[start as usize..end as usize] {
                    let d = (q - p).norm_squared();
                    if d < *best {
                        *best = d;
                    }
                }
            }
            KdNode::Split { axis, value, right } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 { (node + 1, right as usize) } else { (right as usize, node + 1) };
                self.search(near, q, best);
                if diff * diff <= *best {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build(points: &mut [Point3], start: usize, end: usize, nodes: &mut Vec<KdNode>) -> usize {
    let index = nodes.len();
    if end - start <= LEAF {
        nodes.push(KdNode::Leaf { start: start as u32, end: end as u32 });
        return index;
    }
    let (mut lo, mut hi) = (Point3::from([f64::INFINITY; 3]), Point3::from([f64::NEG_INFINITY; 3]));
    for p in &points[start..end] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let axis = (hi - lo).imax();
    let mid = start + (end - start) / 2;
    points[start..end].select_nth_unstable_by(mid - start, |a, b| a[axis].total_cmp(&b[axis]));
    let value = points[mid][axis];
    nodes.push(KdNode::Split { axis: axis as u8, value, right: 0 });
    build(points, start, mid, nodes);
    let right = build(points, mid, end, nodes);
    nodes[index] = KdNode::Split { axis: axis as u8, value, right: right as u32 };
    index
}

/// Uniform hash grid with cell size `radius` for "any neighbour closer than
/// `radius`" queries; a query probes the 27 cells around its own.
pub struct RadiusGrid {
    radius: f64,
    cells: FxHashMap<[i64; 3], Vec<Point3>>,
}

impl RadiusGrid {
    pub fn new(points: &[Point3], radius: f64) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        let mut cells: FxHashMap<[i64; 3], Vec<Point3>> = FxHashMap::default();
        for p in points {
            cells.entry(cell_of(p, radius)).or_default().push(*p);
        }
        Self { radius, cells }
    }

    /// True when some point lies strictly closer than the radius.
    pub fn has_neighbor_within(&self, q: &Point3) -> bool {
        let c = cell_of(q, self.radius);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(members) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if members.iter().any(|p| (q - p).norm() < self.radius) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

#[inline]
fn cell_of(p: &Point3, size: f64) -> [i64; 3] {
    [(p.x / size).floor() as i64, (p.y / size).floor() as i64, (p.z / size).floor() as i64]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kd_tree_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..500).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect();
        let tree = KdTree::new(&pts);
        for _ in 0..200 {
            let q = Point3::new(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5));
            let want = pts.iter().map(|p| (q - p).norm()).fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest_distance(&q), want);
        }
    }

    #[test]
    fn radius_grid_is_strict() {
        let pts = [Point3::new(0.0, 0.0, 0.0)];
        let grid = RadiusGrid::new(&pts, 0.5);
        assert!(grid.has_neighbor_within(&Point3::new(0.49, 0.0, 0.0)));
        assert!(!grid.has_neighbor_within(&Point3::new(0.5, 0.0, 0.0)));
        assert!(!grid.has_neighbor_within(&Point3::new(-0.3, -0.3, -0.3)));
    }

    #[test]
    fn empty_tree() {
        assert_eq!(KdTree::new(&[]).nearest_distance(&Point3::origin()), f64::INFINITY);
    }
}
