//! Seeded procedural tomato-like plant generator.
//!
//! A plant is a tapered vertical stem with leaf nodes spaced along it. Each
//! node carries a short lateral cylinder, a curved rachis and a fan of
//! elliptical leaflets; spherical fruit trusses hang between nodes. All
//! geometry stays inside a 0.3 × 0.3 × 0.7 m box centered on the stem axis.

use std::f64::consts::{PI, TAU};

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point3, Vector3};

use super::mesh::{PartLabel, TriangleMesh};

/// Horizontal reach limit of any plant vertex from the stem axis (m).
pub const MAX_RADIAL_EXTENT: f64 = 0.145;
/// Maximum plant height above the base (m).
pub const MAX_HEIGHT: f64 = 0.7;
/// Node centers sit this far from the stem axis, on the petiole side (m).
pub const NODE_CENTER_OFFSET: f64 = 0.008;

const STEM_SIDES: usize = 12;
const BRANCH_SIDES: usize = 8;

/// Rigid placement of the plant base: position plus yaw about world +z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub position: Point3,
    /// Radians.
    pub yaw: f64,
}

impl BasePose {
    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.position.coords),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), self.yaw),
        )
    }
}

impl Default for BasePose {
    fn default() -> Self {
        Self { position: Point3::new(1.0, 0.0, 0.8), yaw: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    /// 1..=10; scales stem height and leaf size.
    pub growth_stage: u8,
    /// At least 3.
    pub leaf_node_count: u32,
    /// Fraction of leaflets omitted per leaf, evenly spaced along the leaf.
    pub leaflet_removal_fraction: f64,
    pub base_pose: BasePose,
    pub rng_seed: u64,
}

impl PlantSpec {
    /// The spec of plant model `model_seed`, shared by all orientations of that model.
    pub fn for_model(model_seed: u64, leaflet_removal_fraction: f64, base_pose: BasePose) -> Self {
        let growth_stage = (model_seed % 10) as u8 + 1;
        Self {
            growth_stage,
            leaf_node_count: 6 + (growth_stage as u32 - 1) * 4 / 9,
            leaflet_removal_fraction,
            base_pose,
            rng_seed: model_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.growth_stage) {
            return Err(Error::InvalidSpec(format!("growth stage {} outside 1..=10", self.growth_stage)));
        }
        if self.leaf_node_count < 3 {
            return Err(Error::InvalidSpec(format!("{} leaf nodes, at least 3 required", self.leaf_node_count)));
        }
        if !(0.0..=1.0).contains(&self.leaflet_removal_fraction) {
            return Err(Error::InvalidSpec(format!(
                "leaflet removal fraction {} outside [0, 1]",
                self.leaflet_removal_fraction
            )));
        }
        if !self.base_pose.position.coords.iter().all(|c| c.is_finite()) || !self.base_pose.yaw.is_finite() {
            return Err(Error::InvalidSpec("base pose is not finite".into()));
        }
        Ok(())
    }

    pub fn stem_height(&self) -> f64 {
        0.5 + 0.2 * (self.growth_stage as f64 - 1.0) / 9.0
    }
}

/// World-frame facts about a generated plant, used to place attention regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantMetadata {
    pub stem_base: Point3,
    pub stem_top: Point3,
    /// Leaf-node centers ordered bottom to top.
    pub leaf_nodes: Vec<Point3>,
    pub growth_stage: u8,
    pub truss_count: usize,
}

impl PlantMetadata {
    pub fn stem_axis(&self) -> Vector3 {
        (self.stem_top - self.stem_base).normalize()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Distance from `p` to the (infinite) stem axis line.
    pub fn distance_to_axis(&self, p: &Point3) -> f64 {
        let axis = self.stem_axis();
        let d = p - self.stem_base;
        (d - axis * d.dot(&axis)).norm()
    }
}

/// True when leaflet `index` is omitted for the given removal fraction.
/// For 0.5 this removes exactly every second leaflet (indices 1, 3, 5, ...).
pub fn leaflet_removed(index: usize, fraction: f64) -> bool {
    ((index + 1) as f64 * fraction).floor() > (index as f64 * fraction).floor()
}

/// Generates the plant mesh (world frame) and its metadata.
pub fn generate_plant(spec: &PlantSpec) -> Result<(TriangleMesh, PlantMetadata)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut b = MeshBuilder::default();

    let height = spec.stem_height();
    let stage = spec.growth_stage as f64;
    let stem_radius = |z: f64| 0.0065 - 0.0025 * (z / height);

    // Stem.
    let rings = (height / 0.02).ceil() as usize;
    let stem_path: Vec<Point3> = (0..=rings).map(|i| Point3::new(0.0, 0.0, height * i as f64 / rings as f64)).collect();
    let stem_radii: Vec<f64> = stem_path.iter().map(|p| stem_radius(p.z)).collect();
    b.tube(&stem_path, &stem_radii, STEM_SIDES, true, PartLabel::Stem);

    // Leaf nodes.
    let n = spec.leaf_node_count as usize;
    let phase = rng.random_range(0.0..TAU);
    let spacing = 0.72 * height / (n - 1) as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut azimuths = Vec::with_capacity(n);
    for k in 0..n {
        let z = height * 0.14 + spacing * k as f64 + rng.random_range(-0.15..0.15) * spacing;
        let az = phase + k as f64 * 137.5_f64.to_radians() + rng.random_range(-15.0_f64..15.0).to_radians();
        let radial = Vector3::new(az.cos(), az.sin(), 0.0);
        nodes.push(Point3::new(0.0, 0.0, z) + radial * NODE_CENTER_OFFSET);
        azimuths.push(az);

        // Short lateral cylinder from inside the stem out to the rachis start.
        let stub_end = Point3::new(0.0, 0.0, z) + radial * 0.018 + Vector3::z() * 0.006;
        b.tube(&[Point3::new(0.0, 0.0, z - 0.002), stub_end], &[0.0038, 0.0032], BRANCH_SIDES, true, PartLabel::Stem);

        let reach = (0.075 + 0.0022 * stage) * rng.random_range(0.92..1.08);
        let leaflet_len = (0.046 + 0.0016 * stage) * rng.random_range(0.9..1.1);
        b.leaf(&mut rng, stub_end, az, reach, leaflet_len, spec.leaflet_removal_fraction);
    }

    // Trusses hang from internodes, opposite the leaf below them.
    let truss_count = 1 + (spec.growth_stage as usize - 1) / 3;
    let mut slots: Vec<usize> = (1..n - 1).collect();
    for _ in 0..truss_count.min(slots.len()) {
        let pick = rng.random_range(0..slots.len());
        let k = slots.swap_remove(pick);
        let z = 0.5 * (nodes[k].z + nodes[k + 1].z);
        let az = azimuths[k] + PI + rng.random_range(-0.35..0.35);
        b.truss(&mut rng, z, az, 0.011 + 0.0007 * stage);
    }

    let iso = spec.base_pose.isometry();
    let mesh = TriangleMesh::new(b.vertices, b.triangles, Some(b.labels))?.transformed(&iso);
    let metadata = PlantMetadata {
        stem_base: iso * Point3::origin(),
        stem_top: iso * Point3::new(0.0, 0.0, height),
        leaf_nodes: nodes.iter().map(|p| iso * p).collect(),
        growth_stage: spec.growth_stage,
        truss_count: truss_count.min(n.saturating_sub(2)),
    };
    Ok((mesh, metadata))
}

#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
    labels: Vec<PartLabel>,
}

impl MeshBuilder {
    fn push_vertex(&mut self, p: Point3) -> u32 {
        self.vertices.push(p);
        (self.vertices.len() - 1) as u32
    }

    fn tri(&mut self, a: u32, b: u32, c: u32, label: PartLabel) {
        self.triangles.push([a, b, c]);
        self.labels.push(label);
    }

    /// Generalised cylinder along a polyline with per-point radii.
    fn tube(&mut self, path: &[Point3], radii: &[f64], sides: usize, cap_end: bool, label: PartLabel) {
        let mut rings = Vec::with_capacity(path.len());
        for (i, p) in path.iter().enumerate() {
            let tangent = if i + 1 < path.len() { path[i + 1] - p } else { p - path[i - 1] }.normalize();
            let helper = if tangent.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
            let u = tangent.cross(&helper).normalize();
            let v = tangent.cross(&u);
            let start = self.vertices.len() as u32;
            for s in 0..sides {
                let a = TAU * s as f64 / sides as f64;
                self.push_vertex(p + (u * a.cos() + v * a.sin()) * radii[i]);
            }
            rings.push(start);
        }
        for w in rings.windows(2) {
            for s in 0..sides as u32 {
                let s1 = (s + 1) % sides as u32;
                let (a, b, c, d) = (w[0] + s, w[0] + s1, w[1] + s, w[1] + s1);
                self.tri(a, b, d, label);
                self.tri(a, d, c, label);
            }
        }
        if cap_end {
            let last = *path.last().unwrap();
            let center = self.push_vertex(last);
            let ring = *rings.last().unwrap();
            for s in 0..sides as u32 {
                self.tri(ring + s, ring + (s + 1) % sides as u32, center, label);
            }
        }
    }

    /// Curved rachis with paired leaflets and a terminal leaflet.
    fn leaf(&mut self, rng: &mut ChaCha8Rng, start: Point3, azimuth: f64, reach: f64, leaflet_len: f64, removal: f64) {
        let radial = Vector3::new(azimuth.cos(), azimuth.sin(), 0.0);
        let side = Vector3::z().cross(&radial);
        let bend = rng.random_range(-0.12..0.12);
        let rachis_at = |s: f64| -> Point3 {
            let lateral = bend * reach * s * s;
            start + radial * (reach * s) + side * lateral + Vector3::z() * (reach * (0.45 * s - 0.6 * s * s))
        };
        let first = self.vertices.len();
        let path: Vec<Point3> = (0..=6).map(|i| rachis_at(i as f64 / 6.0)).collect();
        self.tube(&path, &[0.0024; 7], BRANCH_SIDES, true, PartLabel::Leaf);

        // Leaflet slots base-to-tip in zig-zag order so that even removal alternates sides.
        let mut slots: Vec<(f64, f64)> = Vec::with_capacity(7);
        for (pair, s) in [0.3, 0.58, 0.84].into_iter().enumerate() {
            let sides = if pair % 2 == 0 { [1.0, -1.0] } else { [-1.0, 1.0] };
            slots.extend(sides.iter().map(|&sgn| (s, sgn)));
        }
        slots.push((1.0, 0.0));

        for (index, &(s, sgn)) in slots.iter().enumerate() {
            if leaflet_removed(index, removal) {
                continue;
            }
            let base = rachis_at(s);
            let tangent = (rachis_at((s + 0.01).min(1.0)) - rachis_at(s - 0.01)).normalize();
            let spread = if sgn == 0.0 { 0.0 } else { rng.random_range(50.0_f64..65.0).to_radians() };
            let horiz = Vector3::new(tangent.x, tangent.y, 0.0).normalize();
            let across = Vector3::z().cross(&horiz);
            let dir = (horiz * spread.cos() + across * (sgn * spread.sin()) - Vector3::z() * 0.2).normalize();
            let len = leaflet_len * if sgn == 0.0 { 1.05 } else { rng.random_range(0.85..1.0) };
            self.leaflet(base, dir, len, 0.46 * len, rng.random_range(-0.35..0.35));
        }

        // Pull the whole leaf in if it reaches past the allowed radius.
        let max_r = self.vertices[first..].iter().map(|v| v.coords.xy().norm()).fold(0.0, f64::max);
        if max_r > MAX_RADIAL_EXTENT {
            let max_d = self.vertices[first..].iter().map(|v| (v - start).norm()).fold(0.0, f64::max);
            let scale = (MAX_RADIAL_EXTENT - start.coords.xy().norm()) / max_d;
            for v in &mut self.vertices[first..] {
                *v = start + (*v - start) * scale;
            }
        }
    }

    /// Elliptical blade sampled on a 7 × 3 grid with droop and a small roll.
    fn leaflet(&mut self, base: Point3, dir: Vector3, length: f64, width: f64, roll: f64) {
        let across0 = Vector3::z().cross(&dir).normalize();
        let up0 = dir.cross(&across0);
        let (across, up) = (across0 * roll.cos() + up0 * roll.sin(), up0 * roll.cos() - across0 * roll.sin());
        const U: usize = 7;
        let start = self.vertices.len() as u32;
        for i in 0..U {
            let u = i as f64 / (U - 1) as f64;
            let half = 0.5 * width * (PI * (0.06 + 0.88 * u)).sin();
            let center = base + dir * (length * u) - Vector3::z() * (0.22 * length * u * u);
            for v in [-1.0, 0.0, 1.0] {
                let cup = 0.08 * width * v * v;
                self.push_vertex(center + across * (half * v) + up * cup);
            }
        }
        for i in 0..(U - 1) as u32 {
            for j in 0..2u32 {
                let a = start + i * 3 + j;
                let (b, c, d) = (a + 1, a + 3, a + 4);
                self.tri(a, b, d, PartLabel::Leaf);
                self.tri(a, d, c, PartLabel::Leaf);
            }
        }
    }

    fn truss(&mut self, rng: &mut ChaCha8Rng, z: f64, azimuth: f64, fruit_radius: f64) {
        let radial = Vector3::new(azimuth.cos(), azimuth.sin(), 0.0);
        let side = Vector3::z().cross(&radial);
        let root = Point3::new(0.0, 0.0, z);
        let tip = root + radial * 0.045 - Vector3::z() * 0.012;
        self.tube(&[root, root + radial * 0.02, tip], &[0.0022; 3], BRANCH_SIDES, true, PartLabel::Truss);
        let fruits = rng.random_range(3..=5);
        for f in 0..fruits {
            let along = 0.045 + 0.75 * fruit_radius * f as f64;
            let offset = if f % 2 == 0 { 1.0 } else { -1.0 } * 1.05 * fruit_radius;
            let center = root + radial * along + side * offset
                - Vector3::z() * (0.012 + fruit_radius * (1.1 + 0.5 * f as f64));
            let r = fruit_radius * rng.random_range(0.85..1.1);
            self.sphere(center, r, PartLabel::Truss);
        }
    }

    fn sphere(&mut self, center: Point3, radius: f64, label: PartLabel) {
        const SLICES: usize = 10;
        const STACKS: usize = 6;
        let top = self.push_vertex(center + Vector3::z() * radius);
        let first_ring = self.vertices.len() as u32;
        for st in 1..STACKS {
            let polar = PI * st as f64 / STACKS as f64;
            for sl in 0..SLICES {
                let a = TAU * sl as f64 / SLICES as f64;
                let dir = Vector3::new(polar.sin() * a.cos(), polar.sin() * a.sin(), polar.cos());
                self.push_vertex(center + dir * radius);
            }
        }
        let bottom = self.push_vertex(center - Vector3::z() * radius);
        let s = SLICES as u32;
        for sl in 0..s {
            self.tri(top, first_ring + sl, first_ring + (sl + 1) % s, label);
        }
        for st in 0..(STACKS as u32 - 2) {
            let r0 = first_ring + st * s;
            let r1 = r0 + s;
            for sl in 0..s {
                let sl1 = (sl + 1) % s;
                self.tri(r0 + sl, r1 + sl, r1 + sl1, label);
                self.tri(r0 + sl, r1 + sl1, r0 + sl1, label);
            }
        }
        let last = first_ring + (STACKS as u32 - 2) * s;
        for sl in 0..s {
            self.tri(last + sl, bottom, last + (sl + 1) % s, label);
        }
    }
}
