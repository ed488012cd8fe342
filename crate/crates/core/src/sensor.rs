//! Simulated depth camera: pinhole ray model, depth rendering against a mesh
//! scene and back-projection to world-frame point clouds.

use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::scene::BoundingVolumeIndex;
use crate::{Point3, Vector3};

/// Pinhole depth camera intrinsics. Camera frame: +x right, +y down, +z optical axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    /// Radians.
    pub horizontal_fov: f64,
    /// Radians.
    pub vertical_fov: f64,
    pub image_width: usize,
    pub image_height: usize,
    /// Meters.
    pub max_range: f64,
    /// Standard deviation of additive Gaussian depth noise (m). Zero disables noise.
    pub depth_noise_std: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            horizontal_fov: 70f64.to_radians(),
            vertical_fov: 55f64.to_radians(),
            image_width: 320,
            image_height: 240,
            max_range: 0.75,
            depth_noise_std: 0.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let fov_ok = |f: f64| f > 0.0 && f < std::f64::consts::PI;
        if !fov_ok(self.horizontal_fov) || !fov_ok(self.vertical_fov) {
            return Err(Error::InvalidConfig("camera field of view must lie in (0, π)".into()));
        }
        if self.image_width < 2 || self.image_height < 2 {
            return Err(Error::InvalidConfig("camera image must be at least 2 × 2".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::InvalidConfig("camera max range must be positive".into()));
        }
        if !(self.depth_noise_std >= 0.0) {
            return Err(Error::InvalidConfig("depth noise must be non-negative".into()));
        }
        Ok(())
    }

    /// Camera-frame unit ray for grid cell `(u, v)` of a `cols × rows` grid
    /// spread evenly across the field of view, edge rays on the frustum border.
    #[inline]
    pub fn grid_direction(&self, cols: usize, rows: usize, u: usize, v: usize) -> Vector3 {
        let sx = (0.5 * self.horizontal_fov).tan();
        let sy = (0.5 * self.vertical_fov).tan();
        let x = sx * (2.0 * u as f64 / (cols - 1) as f64 - 1.0);
        let y = sy * (2.0 * v as f64 / (rows - 1) as f64 - 1.0);
        Vector3::new(x, y, 1.0).normalize()
    }

    /// Camera-frame rays for a `cols × rows` grid in row-major order.
    pub fn grid_directions(&self, cols: usize, rows: usize) -> Vec<Vector3> {
        (0..rows).flat_map(|v| (0..cols).map(move |u| (u, v))).map(|(u, v)| self.grid_direction(cols, rows, u, v)).collect()
    }

    /// Camera-frame ray of image pixel `(u, v)`.
    #[inline]
    pub fn pixel_direction(&self, u: usize, v: usize) -> Vector3 {
        self.grid_direction(self.image_width, self.image_height, u, v)
    }
}

/// Camera pose. `orientation` maps camera-frame vectors to the world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub position: Point3,
    pub orientation: UnitQuaternion<f64>,
}

impl Viewpoint {
    pub fn new(position: Point3, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    /// Builds a pose from raw quaternion components `[x, y, z, w]`, rejecting
    /// quaternions whose norm differs from one by more than 1e-9.
    pub fn from_components(position: Point3, xyzw: [f64; 4]) -> Result<Self> {
        let q = nalgebra::Quaternion::new(xyzw[3], xyzw[0], xyzw[1], xyzw[2]);
        if (q.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("quaternion norm {} is not 1", q.norm())));
        }
        Ok(Self::new(position, UnitQuaternion::new_normalize(q)))
    }

    /// Camera at `position` with the optical axis through `target`; image "up"
    /// follows `up` as closely as possible.
    pub fn look_at(position: Point3, target: Point3, up: Vector3) -> Self {
        let z = (target - position).normalize();
        let y = -(up - z * up.dot(&z)).normalize();
        let x = y.cross(&z);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
        Self::new(position, UnitQuaternion::from_rotation_matrix(&rot))
    }

    /// Converts a pose given in the x-forward, z-up link convention (as used by
    /// robot tooling) into the optical convention used here.
    pub fn from_x_forward(position: Point3, link: UnitQuaternion<f64>) -> Self {
        let x = link * -Vector3::y();
        let y = link * -Vector3::z();
        let z = link * Vector3::x();
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
        Self::new(position, UnitQuaternion::from_rotation_matrix(&rot))
    }

    /// World-frame optical axis.
    pub fn optical_axis(&self) -> Vector3 {
        self.orientation * Vector3::z()
    }

    pub fn to_world(&self, camera_dir: &Vector3) -> Vector3 {
        self.orientation * camera_dir
    }

    /// Quaternion components `[x, y, z, w]`.
    pub fn quaternion_xyzw(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.i, q.j, q.k, q.w]
    }
}

/// Row-major depth image in meters; `f64::INFINITY` marks pixels without a return.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub const NO_HIT: f64 = f64::INFINITY;

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    pub fn hit_count(&self) -> usize {
        self.data.iter().filter(|d| d.is_finite()).count()
    }

    /// 16-bit binary PGM in millimeters, 65535 for no return.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 2);
        for &d in &self.data {
            let mm = if d.is_finite() { (d * 1000.0).round().clamp(0.0, 65534.0) as u16 } else { u16::MAX };
            out.extend_from_slice(&mm.to_be_bytes());
        }
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_pgm())?;
        Ok(())
    }

    /// Adds zero-mean Gaussian noise to every finite pixel.
    pub fn add_noise<R: Rng>(&mut self, std_dev: f64, max_range: f64, rng: &mut R) {
        if std_dev <= 0.0 {
            return;
        }
        let normal = Normal::new(0.0, std_dev).expect("finite standard deviation");
        for d in self.data.iter_mut().filter(|d| d.is_finite()) {
            *d = (*d + normal.sample(rng)).clamp(1e-6, max_range);
        }
    }
}

/// Renders the distance along each pixel ray to the nearest surface within
/// `max_range`.
pub fn render_depth(scene: &BoundingVolumeIndex, camera: &CameraModel, view: &Viewpoint) -> DepthImage {
    let (w, h) = (camera.image_width, camera.image_height);
    let mut data = vec![DepthImage::NO_HIT; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
        for (u, px) in row.iter_mut().enumerate() {
            let dir = view.to_world(&camera.pixel_direction(u, v));
            if let Some(hit) = scene.cast_ray(&view.position, &dir, camera.max_range) {
                *px = hit.distance;
            }
        }
    });
    DepthImage { width: w, height: h, data }
}

/// One world-frame point per pixel with a return, in row-major pixel order.
pub fn depth_to_cloud(depth: &DepthImage, camera: &CameraModel, view: &Viewpoint) -> PointCloud {
    assert_eq!((depth.width, depth.height), (camera.image_width, camera.image_height), "image size mismatch");
    let mut points = Vec::with_capacity(depth.hit_count());
    for v in 0..depth.height {
        for u in 0..depth.width {
            let d = depth.at(u, v);
            if d.is_finite() {
                points.push(view.position + view.to_world(&camera.pixel_direction(u, v)) * d);
            }
        }
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::TriangleMesh;

    fn plane(z: f64) -> BoundingVolumeIndex {
        let mesh = TriangleMesh::new(
            vec![Point3::new(-5.0, -5.0, z), Point3::new(5.0, -5.0, z), Point3::new(5.0, 5.0, z), Point3::new(-5.0, 5.0, z)],
            vec![[0, 1, 2], [0, 2, 3]],
            None,
        )
        .unwrap();
        BoundingVolumeIndex::build(mesh)
    }

    fn odd_camera() -> CameraModel {
        CameraModel { image_width: 33, image_height: 25, ..CameraModel::default() }
    }

    #[test]
    fn empty_scene_is_all_sentinel() {
        let scene = BoundingVolumeIndex::build(TriangleMesh::default());
        let img = render_depth(&scene, &odd_camera(), &Viewpoint::new(Point3::origin(), UnitQuaternion::identity()));
        assert!(img.data.iter().all(|d| *d == DepthImage::NO_HIT));
        assert!(depth_to_cloud(&img, &odd_camera(), &Viewpoint::new(Point3::origin(), UnitQuaternion::identity())).is_empty());
    }

    #[test]
    fn plane_depths_match_pinhole_geometry() {
        let cam = odd_camera();
        let view = Viewpoint::new(Point3::origin(), UnitQuaternion::identity());
        let img = render_depth(&plane(0.5), &cam, &view);
        assert!((img.at(16, 12) - 0.5).abs() < 1e-6);
        let corner = cam.pixel_direction(0, 0);
        let expected = 0.5 / corner.z;
        assert!((img.at(0, 0) - expected).abs() < 1e-9);
        // Corner ray sits on the frustum edge.
        assert!((corner.x / corner.z + (0.5 * cam.horizontal_fov).tan()).abs() < 1e-12);
    }

    #[test]
    fn identity_pose_back_projection() {
        let cam = odd_camera();
        let view = Viewpoint::new(Point3::origin(), UnitQuaternion::identity());
        let mut img = DepthImage { width: 33, height: 25, data: vec![DepthImage::NO_HIT; 33 * 25] };
        img.data[12 * 33 + 16] = 0.5;
        let cloud = depth_to_cloud(&img, &cam, &view);
        assert_eq!(cloud.len(), 1);
        assert!((cloud.points[0] - Point3::new(0.0, 0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn look_at_points_optical_axis_at_target() {
        let view = Viewpoint::look_at(Point3::new(0.6, 0.0, 1.2), Point3::new(1.0, 0.0, 1.2), Vector3::z());
        assert!((view.optical_axis() - Vector3::x()).norm() < 1e-12);
        // Image +y (down) maps to world -z.
        assert!((view.to_world(&Vector3::y()) + Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn x_forward_conversion_keeps_heading() {
        let yaw = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), -std::f64::consts::FRAC_PI_4);
        let view = Viewpoint::from_x_forward(Point3::origin(), yaw);
        let expected = Vector3::new(1.0, -1.0, 0.0).normalize();
        assert!((view.optical_axis() - expected).norm() < 1e-12);
        assert!((view.to_world(&Vector3::y()) + Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn non_unit_quaternion_is_rejected() {
        assert!(Viewpoint::from_components(Point3::origin(), [0.0, 0.0, 0.0, 1.1]).is_err());
        assert!(Viewpoint::from_components(Point3::origin(), [0.0, 0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn pgm_encodes_millimeters_and_sentinel() {
        let img = DepthImage { width: 2, height: 1, data: vec![0.5, DepthImage::NO_HIT] };
        let pgm = img.to_pgm();
        let header = b"P5\n2 1\n65535\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[0x01, 0xF4, 0xFF, 0xFF]);
    }
}
