//! Expected information gain of a viewpoint.
//!
//! Rays are cast evenly across the camera frustum through the occupancy map.
//! A ray passes through unknown and free voxels and stops at (including) the
//! first occupied voxel or at the raycast range. The gain is the summed Shannon
//! entropy of the visible voxels whose centers fall inside the attention region.

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{OccupancyMap, VoxelIndex};
use crate::roi::RegionOfInterest;
use crate::sensor::{CameraModel, Viewpoint};
use crate::Point3;

/// Shannon entropy in bits of a voxel with occupancy probability `p`.
pub fn voxel_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(p));
    }
    Ok(entropy_unchecked(p))
}

#[inline]
fn entropy_unchecked(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Ray grid and range used for visibility prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainSettings {
    pub ray_cols: usize,
    pub ray_rows: usize,
    /// Meters.
    pub raycast_range: f64,
}

impl Default for GainSettings {
    fn default() -> Self {
        Self { ray_cols: 40, ray_rows: 30, raycast_range: 0.75 }
    }
}

impl GainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.ray_cols < 2 || self.ray_rows < 2 {
            return Err(Error::InvalidConfig("gain ray grid must be at least 2 × 2".into()));
        }
        if !(self.raycast_range > 0.0) {
            return Err(Error::InvalidConfig("raycast range must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub viewpoint: Viewpoint,
    /// Bits.
    pub gain: f64,
    pub visible_voxel_count: usize,
    pub roi_voxel_count: usize,
}

/// Deduplicating voxel set. A bitset over the frustum's bounding box when it
/// is small enough, otherwise a hash set.
enum VisitedSet {
    Bits { min: [i32; 3], dims: [usize; 3], words: Vec<u64> },
    Hash(FxHashSet<VoxelIndex>),
}

const MAX_BITSET_BITS: usize = 1 << 30;

impl VisitedSet {
    fn covering(map: &OccupancyMap, points: &[Point3]) -> Self {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for p in points {
            let v = map.voxel_of(p);
            for (a, c) in [v.i, v.j, v.k].into_iter().enumerate() {
                lo[a] = lo[a].min(c);
                hi[a] = hi[a].max(c);
            }
        }
        let dims = [0, 1, 2].map(|a| (hi[a] as i64 - lo[a] as i64 + 1) as usize);
        let bits = dims.iter().try_fold(1usize, |acc, d| acc.checked_mul(*d));
        match bits {
            Some(n) if n <= MAX_BITSET_BITS => Self::Bits { min: lo, dims, words: vec![0; n.div_ceil(64)] },
            _ => Self::Hash(FxHashSet::default()),
        }
    }

    /// Returns true when `v` was not yet present.
    #[inline]
    fn insert(&mut self, v: VoxelIndex) -> bool {
        match self {
            Self::Bits { min, dims, words } => {
                let (x, y, z) = ((v.i - min[0]) as usize, (v.j - min[1]) as usize, (v.k - min[2]) as usize);
                debug_assert!(x < dims[0] && y < dims[1] && z < dims[2]);
                let bit = (z * dims[1] + y) * dims[0] + x;
                let (w, mask) = (bit >> 6, 1u64 << (bit & 63));
                let fresh = words[w] & mask == 0;
                words[w] |= mask;
                fresh
            }
            Self::Hash(set) => set.insert(v),
        }
    }
}

/// Walks every frustum ray and calls `visit(voxel, log_odds)` once per distinct
/// voxel. Returns the number of distinct voxels.
fn for_each_visible<F>(map: &OccupancyMap, camera: &CameraModel, view: &Viewpoint, settings: &GainSettings, mut visit: F) -> usize
where
    F: FnMut(VoxelIndex, Option<f64>),
{
    let dirs: Vec<_> = camera
        .grid_directions(settings.ray_cols, settings.ray_rows)
        .iter()
        .map(|d| view.to_world(d))
        .collect();
    let ends: Vec<Point3> = dirs.iter().map(|d| view.position + d * settings.raycast_range).collect();
    let mut bounds = ends.clone();
    bounds.push(view.position);
    let mut visited = VisitedSet::covering(map, &bounds);
    let mut reader = map.reader();
    let mut count = 0;
    for end in &ends {
        for v in map.walker(&view.position, end) {
            let l = reader.log_odds(&v);
            if visited.insert(v) {
                count += 1;
                visit(v, l);
            }
            if l.is_some_and(|l| map.is_occupied_log_odds(l)) {
                break;
            }
        }
    }
    count
}

/// Predicted visible voxel set `X_v`, sorted ascending.
pub fn ray_trace_visible(map: &OccupancyMap, camera: &CameraModel, view: &Viewpoint, settings: &GainSettings) -> Vec<VoxelIndex> {
    let mut out = Vec::new();
    for_each_visible(map, camera, view, settings, |v, _| out.push(v));
    out.sort_unstable();
    out
}

/// Expected information gain of `view`, restricted to `roi` unless it is unfiltered.
///
/// The entropy sum runs in ascending voxel order, so the result does not
/// depend on ray order.
pub fn expected_gain(
    map: &OccupancyMap,
    camera: &CameraModel,
    view: &Viewpoint,
    roi: &RegionOfInterest,
    settings: &GainSettings,
) -> GainReport {
    let mut admitted: Vec<(VoxelIndex, f64)> = Vec::new();
    let visible = for_each_visible(map, camera, view, settings, |v, l| {
        if roi.admits(&map.voxel_center(&v)) {
            let p = l.map_or(0.5, |l| map.probability(l));
            admitted.push((v, entropy_unchecked(p)));
        }
    });
    admitted.sort_unstable_by_key(|(v, _)| *v);
    GainReport {
        viewpoint: *view,
        gain: admitted.iter().map(|(_, e)| e).sum(),
        visible_voxel_count: visible,
        roi_voxel_count: admitted.len(),
    }
}
