//! Scene geometry: meshes, the plant generator, ray casting and ground truth.

mod bvh;
mod mesh;
mod plant;
mod sampling;

pub use bvh::{intersect_triangle, BoundingVolumeIndex, RayHit};
pub use mesh::{load_mesh, parse_obj, triangle_normal, PartLabel, TriangleMesh, DEGENERATE_AREA};
pub use plant::{
    generate_plant, leaflet_removed, BasePose, PlantMetadata, PlantSpec, MAX_HEIGHT, MAX_RADIAL_EXTENT,
    NODE_CENTER_OFFSET,
};
pub use sampling::{sample_ground_truth, sample_surface, voxel_downsample, voxel_key, DEFAULT_SAMPLES_PER_M2};

use crate::{Point3, Vector3};

/// Nearest hit of a unit-direction ray within `(0, max_range]`.
pub fn cast_ray(index: &BoundingVolumeIndex, origin: &Point3, direction: &Vector3, max_range: f64) -> Option<RayHit> {
    debug_assert!((direction.norm() - 1.0).abs() <= 1e-9, "ray direction must be unit length");
    debug_assert!(max_range > 0.0);
    index.cast_ray(origin, direction, max_range)
}
