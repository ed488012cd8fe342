//! Brute-force reference implementations.
//!
//! Each function here answers the same question as an optimized routine
//! elsewhere in the crate by exhaustive enumeration, sharing no traversal,
//! indexing or search code with it. They back the oracle test suites and the
//! `oracle` CLI command.

use crate::cloud::PointCloud;
use crate::mapping::{OccupancyMap, VoxelIndex};
use crate::roi::RegionOfInterest;
use crate::scene::{intersect_triangle, RayHit, TriangleMesh};
use crate::sensor::{CameraModel, Viewpoint};
use crate::{Point3, Vector3};

/// Nearest hit over all triangles; ties go to the lowest triangle id.
pub fn brute_force_cast(mesh: &TriangleMesh, origin: &Point3, dir: &Vector3, max_range: f64) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for t in 0..mesh.triangles.len() {
        if let Some(d) = intersect_triangle(origin, dir, &mesh.corners(t)) {
            if d <= max_range && best.is_none_or(|b| d < b.distance) {
                best = Some(RayHit { distance: d, triangle: t as u32 });
            }
        }
    }
    best
}

fn grid_cell(p: &Point3, origin: &Point3, res: f64) -> [i64; 3] {
    let g = (p - origin) / res;
    [g.x.floor() as i64, g.y.floor() as i64, g.z.floor() as i64]
}

/// Parameter interval of the segment `a + t (b - a)`, t ∈ [0, 1], inside the closed box.
fn clip_to_box(a: &Point3, b: &Point3, lo: &Point3, hi: &Point3) -> Option<(f64, f64)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..3 {
        if d[axis] == 0.0 {
            if a[axis] < lo[axis] || a[axis] > hi[axis] {
                return None;
            }
            continue;
        }
        let (mut n, mut f) = ((lo[axis] - a[axis]) / d[axis], (hi[axis] - a[axis]) / d[axis]);
        if n > f {
            std::mem::swap(&mut n, &mut f);
        }
        t0 = t0.max(n);
        t1 = t1.min(f);
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Voxels whose closed box meets the segment in a piece of positive length,
/// plus the voxels containing the endpoints, ordered by entry parameter.
pub fn exact_segment_voxels(a: &Point3, b: &Point3, origin: &Point3, res: f64) -> Vec<VoxelIndex> {
    let (ca, cb) = (grid_cell(a, origin, res), grid_cell(b, origin, res));
    let mut hits: Vec<(f64, VoxelIndex)> = Vec::new();
    for i in ca[0].min(cb[0])..=ca[0].max(cb[0]) {
        for j in ca[1].min(cb[1])..=ca[1].max(cb[1]) {
            for k in ca[2].min(cb[2])..=ca[2].max(cb[2]) {
                let lo = origin + Vector3::new(i as f64, j as f64, k as f64) * res;
                let hi = lo + Vector3::repeat(res);
                let is_end = [i, j, k] == ca || [i, j, k] == cb;
                match clip_to_box(a, b, &lo, &hi) {
                    Some((t0, t1)) if t1 > t0 || is_end => {
                        let entry = if [i, j, k] == ca { -1.0 } else if [i, j, k] == cb && t1 <= t0 { 2.0 } else { t0 };
                        hits.push((entry, VoxelIndex::new(i as i32, j as i32, k as i32)));
                    }
                    _ if is_end => hits.push((if [i, j, k] == ca { -1.0 } else { 2.0 }, VoxelIndex::new(i as i32, j as i32, k as i32))),
                    _ => {}
                }
            }
        }
    }
    hits.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    hits.dedup_by_key(|h| h.1);
    hits.into_iter().map(|(_, v)| v).collect()
}

/// Voxels visited by sampling the segment at a fixed step (plus `b`), sorted.
pub fn dense_march_voxels(a: &Point3, b: &Point3, origin: &Point3, res: f64, step: f64) -> Vec<VoxelIndex> {
    let len = (b - a).norm();
    let n = (len / step).ceil() as usize;
    let mut out: Vec<VoxelIndex> = (0..=n)
        .map(|s| {
            let t = (s as f64 * step / len).min(1.0);
            let c = grid_cell(&(a + (b - a) * t), origin, res);
            VoxelIndex::new(c[0] as i32, c[1] as i32, c[2] as i32)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Length of the segment piece inside voxel `v`.
pub fn clip_length(a: &Point3, b: &Point3, origin: &Point3, res: f64, v: &VoxelIndex) -> f64 {
    let lo = origin + Vector3::new(v.i as f64, v.j as f64, v.k as f64) * res;
    let hi = lo + Vector3::repeat(res);
    clip_to_box(a, b, &lo, &hi).map_or(0.0, |(t0, t1)| (t1 - t0).max(0.0) * (b - a).norm())
}

fn occupied(map: &OccupancyMap, v: &VoxelIndex) -> bool {
    map.occupancy(v) > map.config().occupancy_threshold
}

/// Visible set by exhaustive per-ray enumeration with first-occupied termination.
pub fn brute_force_visible(map: &OccupancyMap, camera: &CameraModel, view: &Viewpoint, cols: usize, rows: usize, range: f64) -> Vec<VoxelIndex> {
    let sx = (0.5 * camera.horizontal_fov).tan();
    let sy = (0.5 * camera.vertical_fov).tan();
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let local = Vector3::new(sx * (2.0 * c as f64 / (cols - 1) as f64 - 1.0), sy * (2.0 * r as f64 / (rows - 1) as f64 - 1.0), 1.0);
            let dir = view.orientation * local.normalize();
            let end = view.position + dir * range;
            for v in exact_segment_voxels(&view.position, &end, map.origin(), map.resolution()) {
                out.push(v);
                if occupied(map, &v) {
                    break;
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn entropy_bits(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

/// Gain by explicit enumeration: every visible voxel, tested box by box.
pub fn brute_force_gain(visible: &[VoxelIndex], map: &OccupancyMap, roi: &RegionOfInterest) -> (f64, usize) {
    let mut gain = 0.0;
    let mut count = 0;
    for v in visible {
        let c = map.voxel_center(v);
        let inside = roi.boxes.is_empty()
            || roi.boxes.iter().any(|b| {
                let (lo, hi) = (b.min(), b.max());
                (0..3).all(|a| c[a] >= lo[a] && c[a] <= hi[a])
            });
        if inside {
            gain += entropy_bits(map.occupancy(v));
            count += 1;
        }
    }
    (gain, count)
}

/// Literal transcription of the iterative NBV step: a running best gain
/// starting at zero, updated inside the voxel loop with a strict comparison.
/// `None` means the initial viewpoint is kept.
pub fn algorithm1_select(visible_sets: &[Vec<VoxelIndex>], map: &OccupancyMap, roi: &RegionOfInterest) -> Option<usize> {
    let mut g_best = 0.0;
    let mut v_best = None;
    for (index, x_v) in visible_sets.iter().enumerate() {
        let mut g_v = 0.0;
        for x in x_v {
            if roi.admits(&map.voxel_center(x)) {
                g_v += entropy_bits(map.occupancy(x));
            }
            if g_v > g_best {
                g_best = g_v;
                v_best = Some(index);
            }
        }
    }
    v_best
}

fn nearest(p: &Point3, cloud: &PointCloud) -> f64 {
    cloud.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)
}

/// O(n·m) chamfer distance.
pub fn brute_force_chamfer(r: &PointCloud, t: &PointCloud) -> f64 {
    let a: f64 = r.iter().map(|p| nearest(p, t)).sum::<f64>() / r.len() as f64;
    let b: f64 = t.iter().map(|p| nearest(p, r)).sum::<f64>() / t.len() as f64;
    a + b
}

/// O(n·m) precision, recall and F1 with the strict `< rho` indicator.
pub fn brute_force_f1(r: &PointCloud, t: &PointCloud, rho: f64) -> (f64, f64, f64) {
    let p = r.iter().filter(|x| nearest(x, t) < rho).count() as f64 / r.len() as f64;
    let q = t.iter().filter(|x| nearest(x, r) < rho).count() as f64 / t.len() as f64;
    let f = if p + q == 0.0 { 0.0 } else { 2.0 * p * q / (p + q) };
    (p, q, f)
}

/// Per-point containment filter.
pub fn brute_force_trim(cloud: &PointCloud, roi: &RegionOfInterest) -> PointCloud {
    if roi.boxes.is_empty() {
        return cloud.clone();
    }
    let mut out = Vec::new();
    for p in cloud.iter() {
        for b in &roi.boxes {
            let (lo, hi) = (b.min(), b.max());
            if (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a]) {
                out.push(*p);
                break;
            }
        }
    }
    PointCloud::new(out)
}

mod suites;

pub use suites::{
    all_suites, argmax_suite, bvh_suite, gain_suite, metrics_suite, random_small_map, traversal_suite, SuiteReport,
};
