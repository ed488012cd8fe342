//! Probabilistic occupancy map with log-odds fusion.
//!
//! Storage is sparse: 8³ bricks of leaf voxels keyed by brick coordinate.
//! Unknown voxels are not stored and read back as probability 0.5.

mod dump;
mod traversal;

use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::{Point3, Vector3};

pub use dump::{parse_dump, MapDump};
pub use traversal::{traverse_segment, SegmentWalker};

const BRICK_BITS: i32 = 3;
const BRICK_EDGE: i32 = 1 << BRICK_BITS;
const BRICK_CELLS: usize = (BRICK_EDGE * BRICK_EDGE * BRICK_EDGE) as usize;
const BRICK_MASK: i32 = BRICK_EDGE - 1;

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
pub fn inverse_logit(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Leaf voxel grid coordinate. The voxel center is
/// `origin + (i + 0.5, j + 0.5, k + 0.5) · resolution`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelIndex {
    pub i: i32,
    pub j: i32,
    pub k: i32,
}

impl VoxelIndex {
    #[inline]
    pub const fn new(i: i32, j: i32, k: i32) -> Self {
        Self { i, j, k }
    }

    pub fn manhattan(&self, other: &VoxelIndex) -> u32 {
        self.i.abs_diff(other.i) + self.j.abs_diff(other.j) + self.k.abs_diff(other.k)
    }

    #[inline]
    fn brick(&self) -> BrickKey {
        BrickKey(self.i >> BRICK_BITS, self.j >> BRICK_BITS, self.k >> BRICK_BITS)
    }

    #[inline]
    fn cell(&self) -> usize {
        (((self.k & BRICK_MASK) << (2 * BRICK_BITS)) | ((self.j & BRICK_MASK) << BRICK_BITS) | (self.i & BRICK_MASK)) as usize
    }
}

impl fmt::Display for VoxelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct BrickKey(i32, i32, i32);

#[derive(Clone)]
struct Brick {
    /// NaN marks an unknown voxel.
    log_odds: [f64; BRICK_CELLS],
    /// Per-insertion marks used to apply at most one update per voxel.
    stamp: [u32; BRICK_CELLS],
}

impl Brick {
    fn empty() -> Box<Self> {
        Box::new(Self { log_odds: [f64::NAN; BRICK_CELLS], stamp: [0; BRICK_CELLS] })
    }
}

/// Occupancy map parameters. Defaults follow the reference setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// Leaf voxel edge, meters.
    pub resolution: f64,
    /// Bounds the addressable extent to ±2^(depth-1) voxels per axis.
    pub tree_depth: u32,
    pub origin: Point3,
    pub clamp_min: f64,
    pub clamp_max: f64,
    pub occupancy_threshold: f64,
    pub hit_probability: f64,
    pub miss_probability: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            resolution: 0.003,
            tree_depth: 16,
            origin: Point3::origin(),
            clamp_min: 0.12,
            clamp_max: 0.97,
            occupancy_threshold: 0.5,
            hit_probability: 0.7,
            miss_probability: 0.4,
        }
    }
}

impl MapConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if p > 0.0 && p < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} = {p} must lie in (0, 1)")))
            }
        };
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidConfig(format!("resolution {} must be positive", self.resolution)));
        }
        if !(1..=31).contains(&self.tree_depth) {
            return Err(Error::InvalidConfig(format!("tree depth {} outside 1..=31", self.tree_depth)));
        }
        prob("clamp_min", self.clamp_min)?;
        prob("clamp_max", self.clamp_max)?;
        prob("occupancy_threshold", self.occupancy_threshold)?;
        prob("hit_probability", self.hit_probability)?;
        prob("miss_probability", self.miss_probability)?;
        if self.clamp_min >= self.clamp_max {
            return Err(Error::InvalidConfig("clamp_min must be below clamp_max".into()));
        }
        Ok(())
    }
}

/// Sparse probabilistic voxel map.
#[derive(Clone)]
pub struct OccupancyMap {
    config: MapConfig,
    log_hit: f64,
    log_miss: f64,
    log_min: f64,
    log_max: f64,
    log_threshold: f64,
    half_extent: i32,
    bricks: Vec<Box<Brick>>,
    lookup: FxHashMap<BrickKey, u32>,
    stored: usize,
    insertions: u32,
}

impl fmt::Debug for OccupancyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OccupancyMap")
            .field("config", &self.config)
            .field("stored_voxels", &self.stored)
            .field("bricks", &self.bricks.len())
            .finish()
    }
}

impl OccupancyMap {
    pub fn new(config: MapConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            log_hit: logit(config.hit_probability),
            log_miss: logit(config.miss_probability),
            log_min: logit(config.clamp_min),
            log_max: logit(config.clamp_max),
            log_threshold: logit(config.occupancy_threshold),
            half_extent: 1 << (config.tree_depth - 1),
            config,
            bricks: Vec::new(),
            lookup: FxHashMap::default(),
            stored: 0,
            insertions: 0,
        })
    }

    pub fn config(&self) -> &MapConfig {
        &self.config
    }

    pub fn resolution(&self) -> f64 {
        self.config.resolution
    }

    pub fn origin(&self) -> &Point3 {
        &self.config.origin
    }

    /// Number of voxels with a stored value.
    pub fn len(&self) -> usize {
        self.stored
    }

    pub fn is_empty(&self) -> bool {
        self.stored == 0
    }

    /// Log-odds range `[logit(clamp_min), logit(clamp_max)]`.
    pub fn log_odds_bounds(&self) -> (f64, f64) {
        (self.log_min, self.log_max)
    }

    pub fn voxel_of(&self, p: &Point3) -> VoxelIndex {
        let g = (p - self.config.origin) / self.config.resolution;
        VoxelIndex::new(g.x.floor() as i32, g.y.floor() as i32, g.z.floor() as i32)
    }

    pub fn voxel_center(&self, v: &VoxelIndex) -> Point3 {
        self.config.origin + Vector3::new(v.i as f64 + 0.5, v.j as f64 + 0.5, v.k as f64 + 0.5) * self.config.resolution
    }

    /// Whether the voxel lies inside the extent addressable at the configured tree depth.
    pub fn in_extent(&self, v: &VoxelIndex) -> bool {
        let h = self.half_extent;
        (-h..h).contains(&v.i) && (-h..h).contains(&v.j) && (-h..h).contains(&v.k)
    }

    pub fn walker(&self, a: &Point3, b: &Point3) -> SegmentWalker {
        SegmentWalker::new(a, b, &self.config.origin, self.config.resolution)
    }

    /// Ordered voxels crossed by the segment `a → b`.
    pub fn traverse_segment(&self, a: &Point3, b: &Point3) -> Vec<VoxelIndex> {
        self.walker(a, b).collect()
    }

    /// Stored log-odds, `None` for an unknown voxel.
    #[inline]
    pub fn log_odds(&self, v: &VoxelIndex) -> Option<f64> {
        let brick = self.lookup.get(&v.brick())?;
        let l = self.bricks[*brick as usize].log_odds[v.cell()];
        (!l.is_nan()).then_some(l)
    }

    /// Occupancy probability; exactly 0.5 for unknown voxels and exactly the
    /// clamp probability for a voxel sitting on a clamp bound.
    pub fn occupancy(&self, v: &VoxelIndex) -> f64 {
        self.log_odds(v).map_or(0.5, |l| self.probability(l))
    }

    #[inline]
    pub fn probability(&self, l: f64) -> f64 {
        if l == self.log_max {
            self.config.clamp_max
        } else if l == self.log_min {
            self.config.clamp_min
        } else {
            inverse_logit(l)
        }
    }

    /// `P_o > occupancy_threshold`, evaluated in log-odds space.
    #[inline]
    pub fn is_occupied_log_odds(&self, l: f64) -> bool {
        l > self.log_threshold
    }

    /// Cursor for fast repeated reads along a walk.
    pub fn reader(&self) -> MapReader<'_> {
        MapReader { map: self, key: None, brick: None }
    }

    /// Iterates stored voxels in ascending index order.
    pub fn stored_voxels(&self) -> Vec<(VoxelIndex, f64)> {
        let mut keys: Vec<(&BrickKey, &u32)> = self.lookup.iter().collect();
        keys.sort_unstable();
        let mut out = Vec::with_capacity(self.stored);
        for (key, &slot) in keys {
            let brick = &self.bricks[slot as usize];
            for (k, j, i) in itertools_cells() {
                let l = brick.log_odds[((k << (2 * BRICK_BITS)) | (j << BRICK_BITS) | i) as usize];
                if !l.is_nan() {
                    out.push((VoxelIndex::new((key.0 << BRICK_BITS) | i, (key.1 << BRICK_BITS) | j, (key.2 << BRICK_BITS) | k), l));
                }
            }
        }
        out.sort_unstable_by_key(|(v, _)| *v);
        out
    }

    /// Centers of all voxels with occupancy above the threshold, ordered by index.
    pub fn export_occupied_cloud(&self) -> PointCloud {
        self.stored_voxels()
            .into_iter()
            .filter(|(_, l)| self.is_occupied_log_odds(*l))
            .map(|(v, _)| self.voxel_center(&v))
            .collect()
    }

    /// Adds a hit (`occupied = true`) or miss measurement to one voxel.
    pub fn update(&mut self, v: &VoxelIndex, occupied: bool) {
        let delta = if occupied { self.log_hit } else { self.log_miss };
        let slot = self.brick_slot(v.brick());
        self.apply(slot, v.cell(), delta);
    }

    /// Sets a voxel's log-odds directly, clamped to the configured bounds.
    pub fn set_log_odds(&mut self, v: &VoxelIndex, l: f64) {
        let slot = self.brick_slot(v.brick());
        let cell = &mut self.bricks[slot].log_odds[v.cell()];
        if cell.is_nan() {
            self.stored += 1;
        }
        *cell = l.clamp(self.log_min, self.log_max);
    }

    /// Inserts one depth measurement set taken from `sensor_origin`.
    ///
    /// Every point's voxel gets one hit update; every other voxel crossed by a
    /// sensor ray gets one miss update. A voxel is updated at most once per call
    /// and a hit takes precedence over a miss. Points farther than `max_range`
    /// and points outside the addressable extent are dropped.
    pub fn insert_cloud(&mut self, sensor_origin: &Point3, cloud: &PointCloud, max_range: f64) -> Result<()> {
        if let Some(i) = cloud.points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinitePoint(i));
        }
        if !sensor_origin.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinitePoint(usize::MAX));
        }
        self.insertions = self.insertions.wrapping_add(1);
        let hit_mark = self.insertions.wrapping_mul(2).wrapping_add(1);
        let miss_mark = self.insertions.wrapping_mul(2);

        let origin_voxel = self.voxel_of(sensor_origin);
        let kept: Vec<&Point3> = cloud
            .points
            .iter()
            .filter(|p| (*p - sensor_origin).norm() <= max_range)
            .filter(|p| self.in_extent(&self.voxel_of(p)))
            .collect();

        let mut hits: Vec<(usize, usize)> = Vec::with_capacity(kept.len() / 2);
        let mut cache: Option<(BrickKey, usize)> = None;
        for p in &kept {
            let v = self.voxel_of(p);
            let slot = self.cached_slot(&mut cache, v.brick());
            let stamp = &mut self.bricks[slot].stamp[v.cell()];
            if *stamp != hit_mark {
                *stamp = hit_mark;
                hits.push((slot, v.cell()));
            }
        }

        let can_walk = self.in_extent(&origin_voxel);
        for p in &kept {
            if !can_walk {
                break;
            }
            let mut walk = self.walker(sensor_origin, p);
            let steps = walk.remaining();
            for _ in 0..steps.saturating_sub(1) {
                let v = walk.next().unwrap();
                let slot = self.cached_slot(&mut cache, v.brick());
                let cell = v.cell();
                let stamp = self.bricks[slot].stamp[cell];
                if stamp != hit_mark && stamp != miss_mark {
                    self.bricks[slot].stamp[cell] = miss_mark;
                    self.apply(slot, cell, self.log_miss);
                }
            }
        }

        for (slot, cell) in hits {
            self.apply(slot, cell, self.log_hit);
        }
        Ok(())
    }

    /// Map dump: header with resolution and origin, then `i j k log_odds` lines.
    pub fn dump(&self) -> String {
        dump::write_dump(self)
    }

    #[inline]
    fn apply(&mut self, slot: usize, cell: usize, delta: f64) {
        let l = &mut self.bricks[slot].log_odds[cell];
        if l.is_nan() {
            self.stored += 1;
            *l = 0.0;
        }
        *l = (*l + delta).clamp(self.log_min, self.log_max);
    }

    #[inline]
    fn cached_slot(&mut self, cache: &mut Option<(BrickKey, usize)>, key: BrickKey) -> usize {
        if let Some((k, slot)) = *cache {
            if k == key {
                return slot;
            }
        }
        let slot = self.brick_slot(key);
        *cache = Some((key, slot));
        slot
    }

    fn brick_slot(&mut self, key: BrickKey) -> usize {
        if let Some(&slot) = self.lookup.get(&key) {
            return slot as usize;
        }
        self.bricks.push(Brick::empty());
        let slot = self.bricks.len() - 1;
        self.lookup.insert(key, slot as u32);
        slot
    }
}

fn itertools_cells() -> impl Iterator<Item = (i32, i32, i32)> {
    (0..BRICK_EDGE).flat_map(|k| (0..BRICK_EDGE).flat_map(move |j| (0..BRICK_EDGE).map(move |i| (k, j, i))))
}

/// Read cursor that remembers the last brick visited.
pub struct MapReader<'a> {
    map: &'a OccupancyMap,
    key: Option<BrickKey>,
    brick: Option<&'a Brick>,
}

impl MapReader<'_> {
    /// Stored log-odds, `None` for unknown.
    #[inline]
    pub fn log_odds(&mut self, v: &VoxelIndex) -> Option<f64> {
        let key = v.brick();
        if self.key != Some(key) {
            self.key = Some(key);
            self.brick = self.map.lookup.get(&key).map(|&s| &*self.map.bricks[s as usize]);
        }
        let l = self.brick?.log_odds[v.cell()];
        (!l.is_nan()).then_some(l)
    }

    #[inline]
    pub fn occupancy(&mut self, v: &VoxelIndex) -> f64 {
        self.log_odds(v).map_or(0.5, |l| self.map.probability(l))
    }
}
