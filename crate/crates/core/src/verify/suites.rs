//! Randomized comparisons of the optimized routines against the brute-force
//! references in this module.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cloud::PointCloud;
use crate::error::Result;
use crate::gain::{expected_gain, ray_trace_visible, GainSettings};
use crate::mapping::{MapConfig, OccupancyMap, VoxelIndex};
use crate::metrics::{chamfer_distance, f1_score, trim_cloud};
use crate::planning::select_next_view;
use crate::roi::{Aabb, RegionOfInterest};
use crate::scene::{generate_plant, BasePose, BoundingVolumeIndex, PlantSpec};
use crate::sensor::{CameraModel, Viewpoint};
use crate::{Point3, Vector3};

use super::*;

/// Outcome of one randomized oracle comparison.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub mismatches: usize,
    /// Worst absolute numeric deviation observed, where applicable.
    pub max_error: f64,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, mismatches: 0, max_error: 0.0, notes: Vec::new(), elapsed: Duration::ZERO }
    }

    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.cases > 0
    }

    fn fail(&mut self, note: String) {
        self.mismatches += 1;
        if self.notes.len() < 5 {
            self.notes.push(note);
        }
    }

    fn error(&mut self, e: f64) {
        self.max_error = self.max_error.max(e);
    }
}

fn unit_vector<R: Rng>(rng: &mut R) -> Vector3 {
    loop {
        let v = Vector3::new(StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng));
        if v.norm() > 1e-6 {
            return v.normalize();
        }
    }
}

/// BVH ray casting against exhaustive triangle testing on a generated plant.
/// Half of the rays aim at a random triangle so that hits are plentiful.
pub fn bvh_suite(rays: usize, seed: u64) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut rep = SuiteReport::new("bvh_vs_brute_force");
    let (mesh, _) = generate_plant(&PlantSpec::for_model(3, 0.0, BasePose::default()))?;
    let (lo, hi) = mesh.bounds().ok_or(crate::error::Error::EmptyMesh)?;
    let index = BoundingVolumeIndex::build(mesh);
    let mesh = index.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..rays {
        let origin = Point3::new(
            rng.random_range(lo.x - 0.3..hi.x + 0.3),
            rng.random_range(lo.y - 0.3..hi.y + 0.3),
            rng.random_range(lo.z - 0.3..hi.z + 0.3),
        );
        let dir = if rng.random_bool(0.5) {
            let [a, b, c] = mesh.corners(rng.random_range(0..mesh.triangles.len()));
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            let target = a + (b - a) * u + (c - a) * v;
            (target - origin).normalize()
        } else {
            unit_vector(&mut rng)
        };
        let range = rng.random_range(0.05..1.5);
        let fast = index.cast_ray(&origin, &dir, range);
        let slow = brute_force_cast(mesh, &origin, &dir, range);
        rep.cases += 1;
        match (fast, slow) {
            (None, None) => {}
            (Some(f), Some(s)) => {
                hits += 1;
                rep.error((f.distance - s.distance).abs());
                if (f.distance - s.distance).abs() > 1e-9 || f.triangle != s.triangle {
                    rep.fail(format!("ray {}: bvh {:?} vs brute {:?}", rep.cases, f, s));
                }
            }
            (f, s) => rep.fail(format!("ray {}: bvh {:?} vs brute {:?}", rep.cases, f, s)),
        }
    }
    rep.notes.push(format!("{hits} hits among {rays} rays"));
    rep.elapsed = started.elapsed();
    Ok(rep)
}

/// Incremental traversal against exact slab enumeration (ordered lists must
/// match), and against dense marching at `resolution / 50`: every marched
/// voxel must be traversed, and every traversed voxel the march misses must
/// be crossed over a length shorter than the march step.
pub fn traversal_suite(segments: usize, seed: u64) -> SuiteReport {
    let started = Instant::now();
    let mut rep = SuiteReport::new("traversal_vs_exact_and_dense_march");
    let res = 0.003;
    let origin = Point3::origin();
    let step = res / 50.0;
    let extent = 16.0 * res;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dense_equal, mut sub_step_clips) = (0, 0);
    for n in 0..segments {
        let mut point = || Point3::new(rng.random::<f64>() * extent, rng.random::<f64>() * extent, rng.random::<f64>() * extent);
        let (a, b) = (point(), point());
        rep.cases += 1;
        let walked = crate::mapping::traverse_segment(&a, &b, &origin, res);
        let exact = exact_segment_voxels(&a, &b, &origin, res);
        if walked != exact {
            rep.fail(format!("segment {n}: traversal {} voxels, exact enumeration {}", walked.len(), exact.len()));
            continue;
        }
        let contiguous = walked.windows(2).all(|w| w[0].manhattan(&w[1]) == 1);
        if !contiguous {
            rep.fail(format!("segment {n}: non-contiguous traversal"));
            continue;
        }
        let marched = dense_march_voxels(&a, &b, &origin, res, step);
        let mut sorted = walked.clone();
        sorted.sort_unstable();
        if marched.iter().any(|v| sorted.binary_search(v).is_err()) {
            rep.fail(format!("segment {n}: dense march visits a voxel the traversal skips"));
            continue;
        }
        let extra: Vec<&VoxelIndex> = sorted.iter().filter(|v| marched.binary_search(v).is_err()).collect();
        if extra.is_empty() {
            dense_equal += 1;
        } else if extra.iter().all(|v| clip_length(&a, &b, &origin, res, v) < step) {
            sub_step_clips += 1;
        } else {
            rep.fail(format!("segment {n}: traversal adds a voxel crossed over ≥ one march step"));
        }
    }
    rep.notes.push(format!(
        "{dense_equal} segments equal the dense march exactly; {sub_step_clips} differ only by corner clips shorter than the march step"
    ));
    rep.elapsed = started.elapsed();
    rep
}

/// A map over the 8³ block `[0, 8)³` with a random mix of unknown, free,
/// uncertain and occupied voxels.
pub fn random_small_map<R: Rng>(rng: &mut R, resolution: f64) -> Result<OccupancyMap> {
    let mut map = OccupancyMap::new(MapConfig { resolution, ..MapConfig::default() })?;
    for i in 0..8 {
        for j in 0..8 {
            for k in 0..8 {
                let v = VoxelIndex::new(i, j, k);
                match rng.random_range(0..10) {
                    0..=3 => {}
                    4..=6 => (0..rng.random_range(1..7)).for_each(|_| map.update(&v, false)),
                    7 | 8 => {
                        map.update(&v, true);
                        map.update(&v, false);
                    }
                    _ => (0..rng.random_range(1..4)).for_each(|_| map.update(&v, true)),
                }
            }
        }
    }
    Ok(map)
}

fn random_view<R: Rng>(rng: &mut R, res: f64) -> Viewpoint {
    let side = 8.0 * res;
    let center = Point3::new(0.5 * side, 0.5 * side, 0.5 * side);
    let mut pos;
    loop {
        pos = Point3::new(
            rng.random_range(-0.5 * side..1.5 * side),
            rng.random_range(-0.5 * side..1.5 * side),
            rng.random_range(-0.5 * side..1.5 * side),
        );
        if (pos - center).norm() > 0.2 * side {
            break;
        }
    }
    let target = center + Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)) * side;
    let up = if rng.random_bool(0.5) { Vector3::z() } else { Vector3::x() };
    if ((target - pos).normalize().cross(&up)).norm() < 1e-3 {
        return Viewpoint::look_at(pos, target, Vector3::y());
    }
    Viewpoint::look_at(pos, target, up)
}

fn random_box<R: Rng>(rng: &mut R, res: f64) -> Aabb {
    let side = 8.0 * res;
    let a = Point3::new(rng.random::<f64>() * side, rng.random::<f64>() * side, rng.random::<f64>() * side);
    let size = Vector3::new(rng.random_range(0.1..0.8), rng.random_range(0.1..0.8), rng.random_range(0.1..0.8)) * side;
    Aabb::new(a, size)
}

/// Visible sets, ROI gains and the unfiltered-equals-covering-box identity on
/// random 8³ maps with a 4 × 4 ray grid.
pub fn gain_suite(maps: usize, seed: u64) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut rep = SuiteReport::new("gain_vs_enumeration");
    let res = 0.01;
    let camera = CameraModel { horizontal_fov: 1.0, vertical_fov: 0.8, ..CameraModel::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..maps {
        rep.cases += 1;
        let map = random_small_map(&mut rng, res)?;
        let view = random_view(&mut rng, res);
        let range = rng.random_range(0.03..0.15);
        let settings = GainSettings { ray_cols: 4, ray_rows: 4, raycast_range: range };
        let visible = ray_trace_visible(&map, &camera, &view, &settings);
        let expected = brute_force_visible(&map, &camera, &view, 4, 4, range);
        if visible != expected {
            rep.fail(format!("map {n}: visible set {} voxels, enumeration {}", visible.len(), expected.len()));
            continue;
        }
        let boxes = (0..rng.random_range(1..3)).map(|_| random_box(&mut rng, res)).collect();
        let roi = RegionOfInterest::new("random", boxes);
        let report = expected_gain(&map, &camera, &view, &roi, &settings);
        let (gain, count) = brute_force_gain(&expected, &map, &roi);
        rep.error((report.gain - gain).abs());
        if (report.gain - gain).abs() > 1e-9 || report.roi_voxel_count != count || report.visible_voxel_count != expected.len() {
            rep.fail(format!("map {n}: gain {} ({} voxels) vs {} ({} voxels)", report.gain, report.roi_voxel_count, gain, count));
            continue;
        }
        let unfiltered = expected_gain(&map, &camera, &view, &RegionOfInterest::none(), &settings);
        let ball = Aabb::new(view.position, Vector3::repeat(2.0 * range + 4.0 * res));
        let covering = expected_gain(&map, &camera, &view, &RegionOfInterest::new("ball", vec![ball]), &settings);
        if unfiltered.gain != covering.gain || unfiltered.roi_voxel_count != covering.roi_voxel_count {
            rep.fail(format!("map {n}: unfiltered gain {} differs from covering-box gain {}", unfiltered.gain, covering.gain));
        }
    }
    rep.elapsed = started.elapsed();
    Ok(rep)
}

/// Argmax selection against the literal nested-loop transcription, plus
/// invariance of the choice under positive gain scaling.
pub fn argmax_suite(sets: usize, seed: u64) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut rep = SuiteReport::new("selection_vs_literal_loop");
    let res = 0.01;
    let camera = CameraModel { horizontal_fov: 1.0, vertical_fov: 0.8, ..CameraModel::default() };
    let settings = GainSettings { ray_cols: 4, ray_rows: 4, raycast_range: 0.12 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept_initial = 0;
    for n in 0..sets {
        rep.cases += 1;
        let map = random_small_map(&mut rng, res)?;
        let roi = if rng.random_bool(0.25) {
            RegionOfInterest::none()
        } else {
            RegionOfInterest::new("random", vec![random_box(&mut rng, res)])
        };
        let candidates: Vec<Viewpoint> = (0..rng.random_range(2..28)).map(|_| random_view(&mut rng, res)).collect();
        let reports: Vec<_> = candidates.iter().map(|c| expected_gain(&map, &camera, c, &roi, &settings)).collect();
        let visible: Vec<Vec<VoxelIndex>> = candidates.iter().map(|c| ray_trace_visible(&map, &camera, c, &settings)).collect();
        let (_, chosen) = select_next_view(&candidates, &reports)?;
        match algorithm1_select(&visible, &map, &roi) {
            Some(i) if i == chosen => {}
            None if reports.iter().all(|r| r.gain == 0.0) && chosen == 0 => kept_initial += 1,
            other => {
                rep.fail(format!("set {n}: selection {chosen}, literal loop {other:?}"));
                continue;
            }
        }
        let scale = rng.random_range(0.01..100.0);
        let scaled: Vec<_> = reports.iter().map(|r| crate::gain::GainReport { gain: r.gain * scale, ..r.clone() }).collect();
        if select_next_view(&candidates, &scaled)?.1 != chosen {
            rep.fail(format!("set {n}: choice changes under scaling by {scale}"));
        }
    }
    rep.notes.push(format!("{kept_initial} sets with all-zero gains (first candidate / initial view kept)"));
    rep.elapsed = started.elapsed();
    Ok(rep)
}

fn random_cloud<R: Rng>(rng: &mut R, n: usize) -> PointCloud {
    (0..n).map(|_| Point3::new(rng.random(), rng.random(), rng.random())).collect()
}

/// Chamfer, precision/recall/F1 and trimming against O(n²) references on
/// random 200-point clouds.
pub fn metrics_suite(pairs: usize, seed: u64) -> Result<SuiteReport> {
    let started = Instant::now();
    let mut rep = SuiteReport::new("metrics_vs_brute_force");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..pairs {
        rep.cases += 1;
        let r = random_cloud(&mut rng, 200);
        let t = random_cloud(&mut rng, 200);
        let rho = rng.random_range(0.02..0.2);
        let chamfer = chamfer_distance(&r, &t)?;
        let reference = brute_force_chamfer(&r, &t);
        rep.error((chamfer - reference).abs());
        if (chamfer - reference).abs() > 1e-12 || chamfer != chamfer_distance(&t, &r)? {
            rep.fail(format!("pair {n}: chamfer {chamfer} vs {reference}"));
            continue;
        }
        let s = f1_score(&r, &t, rho)?;
        let (p, q, f) = brute_force_f1(&r, &t, rho);
        rep.error((s.f1 - f).abs());
        if s.precision != p || s.recall != q || (s.f1 - f).abs() > 1e-12 {
            rep.fail(format!("pair {n}: f1 {:?} vs ({p}, {q}, {f})", s));
            continue;
        }
        let roi = RegionOfInterest::new("random", vec![Aabb::new(Point3::new(0.5, 0.5, 0.5), Vector3::repeat(rng.random_range(0.1..1.0)))]);
        if trim_cloud(&r, &roi) != brute_force_trim(&r, &roi) {
            rep.fail(format!("pair {n}: trimming differs from per-point containment"));
        }
    }
    rep.elapsed = started.elapsed();
    Ok(rep)
}

/// Every suite at its default size.
pub fn all_suites(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        bvh_suite(10_000, seed)?,
        traversal_suite(1_000, seed),
        gain_suite(50, seed)?,
        argmax_suite(100, seed)?,
        metrics_suite(20, seed)?,
    ])
}
