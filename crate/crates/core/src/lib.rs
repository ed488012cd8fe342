//! Desk-scale active-vision workbench for volumetric plant reconstruction.
//!
//! The crate is organised along the reconstruction loop:
//!
//! - [`scene`]: triangle meshes, the procedural plant generator, BVH ray casting
//!   and ground-truth surface sampling.
//! - [`sensor`]: pinhole depth camera rendering against a scene.
//! - [`mapping`]: probabilistic occupancy map with log-odds fusion and
//!   voxel traversal.
//! - [`gain`]: entropy-based expected information gain with region-of-interest
//!   attention.
//! - [`planning`]: candidate sampling on the cylindrical sector, next-best-view,
//!   pre-defined and random planners.
//! - [`metrics`]: chamfer distance, precision/recall/F1 and views-to-threshold.
//! - [`harness`]: study orchestration, aggregation, CSV/JSON/SVG output.
//! - [`verify`]: brute-force reference implementations used by the oracle suites.

pub mod cloud;
pub mod error;
pub mod gain;
pub mod harness;
pub mod mapping;
pub mod metrics;
pub mod planning;
pub mod roi;
pub mod scene;
pub mod sensor;
pub mod verify;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use roi::{Aabb, RegionOfInterest};

/// World-frame point in meters.
pub type Point3 = nalgebra::Point3<f64>;
/// World-frame vector in meters.
pub type Vector3 = nalgebra::Vector3<f64>;
