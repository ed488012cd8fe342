//! Ground-truth surface sampling and voxel-grid downsampling.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::{Point3, Vector3};

use super::mesh::TriangleMesh;

/// Default surface sampling density, points per m².
pub const DEFAULT_SAMPLES_PER_M2: f64 = 2.0e6;

const SAMPLING_SEED: u64 = 0x5EED_0F_6A0D;

/// Area-weighted uniform surface samples followed by a voxel-grid filter
/// aligned with the world origin.
pub fn sample_ground_truth(mesh: &TriangleMesh, samples_per_m2: f64, voxel_size: f64) -> Result<PointCloud> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let samples = sample_surface(mesh, samples_per_m2);
    Ok(voxel_downsample(&samples, voxel_size, &Point3::origin()))
}

/// Uniform surface samples; each triangle receives `area · density` points
/// with stochastic rounding, so the expected count is exact.
pub fn sample_surface(mesh: &TriangleMesh, samples_per_m2: f64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
    let mut out = Vec::with_capacity((mesh.surface_area() * samples_per_m2) as usize + mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.corners(t);
        let expected = mesh.triangle_area(t) * samples_per_m2;
        let count = expected.floor() as usize + usize::from(rng.random::<f64>() < expected.fract());
        for _ in 0..count {
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            out.push(Point3::from(a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2)));
        }
    }
    out
}

/// Grid cell of `p` for a grid with the given origin and cell size.
#[inline]
pub fn voxel_key(p: &Point3, voxel_size: f64, origin: &Point3) -> [i64; 3] {
    let q = (p - origin) / voxel_size;
    [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
}

/// Keeps one point per occupied voxel: the centroid of its members. Output is
/// sorted by voxel key, so it does not depend on input order.
pub fn voxel_downsample(points: &[Point3], voxel_size: f64, origin: &Point3) -> PointCloud {
    assert!(voxel_size > 0.0, "voxel size must be positive");
    let mut cells: HashMap<[i64; 3], (Vector3, usize)> = HashMap::new();
    for p in points {
        let entry = cells.entry(voxel_key(p, voxel_size, origin)).or_insert((Vector3::zeros(), 0));
        entry.0 += p.coords;
        entry.1 += 1;
    }
    let mut cells: Vec<_> = cells.into_iter().collect();
    cells.sort_unstable_by_key(|(k, _)| *k);
    cells.into_iter().map(|(_, (sum, n))| Point3::from(sum / n as f64)).collect()
}
