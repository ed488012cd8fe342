//! Candidate viewpoint sampling on the cylindrical sector and the planner
//! families: attention-driven NBV, pre-defined patterns and random.

mod trace;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::{expected_gain, GainReport, GainSettings};
use crate::mapping::{MapConfig, OccupancyMap};
use crate::roi::RegionOfInterest;
use crate::scene::BoundingVolumeIndex;
use crate::sensor::{depth_to_cloud, render_depth, CameraModel, Viewpoint};
use crate::{Point3, Vector3};

pub use trace::{CandidateGain, TrialTrace, ViewRecord};

/// Admissible camera surface: a vertical cylinder patch around the stem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CylindricalSector {
    /// Stem base; heights are measured from here along `axis`.
    pub axis_point: Point3,
    pub axis: Vector3,
    /// Meters.
    pub radius: f64,
    /// Meters.
    pub height: f64,
    /// Full opening angle 2θ in radians.
    pub sector_angle: f64,
    /// Direction of the sector bisector, radians about the axis (0 = +x).
    pub angular_center: f64,
}

impl Default for CylindricalSector {
    fn default() -> Self {
        Self {
            axis_point: Point3::new(1.0, 0.0, 0.8),
            axis: Vector3::z(),
            radius: 0.4,
            height: 0.7,
            sector_angle: PI / 2.0,
            angular_center: PI,
        }
    }
}

impl CylindricalSector {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidConfig("sector radius and height must be positive".into()));
        }
        if !(self.sector_angle > 0.0 && self.sector_angle <= 2.0 * PI) {
            return Err(Error::InvalidConfig("sector angle must lie in (0, 2π]".into()));
        }
        if ((self.axis.norm() - 1.0).abs()) > 1e-9 {
            return Err(Error::InvalidConfig("sector axis must be a unit vector".into()));
        }
        Ok(())
    }

    pub fn min_angle(&self) -> f64 {
        self.angular_center - 0.5 * self.sector_angle
    }

    /// Orthonormal frame `(e1, e2)` perpendicular to the axis; angle 0 lies
    /// along `e1`. For a vertical axis this is world +x / +y.
    fn radial_frame(&self) -> (Vector3, Vector3) {
        let a = self.axis;
        let reference = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (reference - a * reference.dot(&a)).normalize();
        (e1, a.cross(&e1))
    }

    /// Point on the axis at `height` above the base.
    pub fn axis_at(&self, height: f64) -> Point3 {
        self.axis_point + self.axis * height
    }

    /// Surface point at `angle` (radians) and `height` (meters above base).
    pub fn position(&self, angle: f64, height: f64) -> Point3 {
        let (e1, e2) = self.radial_frame();
        self.axis_at(height) + (e1 * angle.cos() + e2 * angle.sin()) * self.radius
    }

    /// Camera on the surface gazing level at the axis.
    pub fn viewpoint(&self, angle: f64, height: f64) -> Viewpoint {
        Viewpoint::look_at(self.position(angle, height), self.axis_at(height), self.axis)
    }

    /// Distance of `p` from the axis line and its height above the base.
    pub fn cylindrical_coordinates(&self, p: &Point3) -> (f64, f64) {
        let d = p - self.axis_point;
        let h = d.dot(&self.axis);
        ((d - self.axis * h).norm(), h)
    }

    /// `(angle, height)` bounds of grid cell `(row, col)`; rows split the
    /// height (row 0 at the bottom), columns the angle (col 0 at the lowest angle).
    pub fn cell_bounds(&self, rows: usize, cols: usize, row: usize, col: usize) -> ((f64, f64), (f64, f64)) {
        let da = self.sector_angle / cols as f64;
        let dh = self.height / rows as f64;
        let a0 = self.min_angle() + col as f64 * da;
        let h0 = row as f64 * dh;
        ((a0, a0 + da), (h0, h0 + dh))
    }

    pub fn cell_center(&self, rows: usize, cols: usize, row: usize, col: usize) -> Viewpoint {
        let ((a0, a1), (h0, h1)) = self.cell_bounds(rows, cols, row, col);
        self.viewpoint(0.5 * (a0 + a1), 0.5 * (h0 + h1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub samples_per_cell: usize,
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { grid_rows: 3, grid_cols: 3, samples_per_cell: 3, rng_seed: 0 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 || self.grid_cols == 0 || self.samples_per_cell == 0 {
            return Err(Error::InvalidConfig("sampler grid and samples per cell must be positive".into()));
        }
        Ok(())
    }

    pub fn candidate_count(&self) -> usize {
        self.grid_rows * self.grid_cols * self.samples_per_cell
    }
}

/// Pseudo-random candidates seeded from `cfg.rng_seed`.
pub fn sample_candidates(sector: &CylindricalSector, cfg: &SamplerConfig) -> Vec<Viewpoint> {
    sample_candidates_with(sector, cfg, &mut ChaCha8Rng::seed_from_u64(cfg.rng_seed))
}

/// Draws `samples_per_cell` uniform `(angle, height)` pairs in every grid
/// cell, cells in row-major order.
pub fn sample_candidates_with<R: Rng>(sector: &CylindricalSector, cfg: &SamplerConfig, rng: &mut R) -> Vec<Viewpoint> {
    let mut out = Vec::with_capacity(cfg.candidate_count());
    for row in 0..cfg.grid_rows {
        for col in 0..cfg.grid_cols {
            let ((a0, a1), (h0, h1)) = sector.cell_bounds(cfg.grid_rows, cfg.grid_cols, row, col);
            for _ in 0..cfg.samples_per_cell {
                let a = a0 + (a1 - a0) * rng.random::<f64>();
                let h = h0 + (h1 - h0) * rng.random::<f64>();
                out.push(sector.viewpoint(a, h));
            }
        }
    }
    out
}

/// Visit orders over the 3 × 3 cell grid as `(row, col)`, row 0 at the
/// bottom and col 0 at the lowest angle.
const PATTERNS: [[(usize, usize); 9]; 4] = [
    // Column-major serpentine starting bottom-left.
    [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1), (0, 2), (1, 2), (2, 2)],
    // Row-major serpentine starting bottom-left.
    [(0, 0), (0, 1), (0, 2), (1, 2), (1, 1), (1, 0), (2, 0), (2, 1), (2, 2)],
    // Clockwise spiral outwards from the center.
    [(1, 1), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1), (0, 0), (1, 0), (2, 0)],
    // Counter-clockwise spiral inwards from the top-left corner.
    [(2, 0), (1, 0), (0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (1, 1)],
];

pub const PATTERN_COUNT: u8 = PATTERNS.len() as u8;

/// Grid cells of a pre-defined pattern in visit order.
pub fn pattern_cells(pattern_id: u8) -> Result<&'static [(usize, usize); 9]> {
    match pattern_id {
        1..=PATTERN_COUNT => Ok(&PATTERNS[pattern_id as usize - 1]),
        _ => Err(Error::UnknownPattern(pattern_id)),
    }
}

/// The nine cell-center viewpoints in pattern order, cycled to `n_views`.
pub fn predefined_sequence(sector: &CylindricalSector, pattern_id: u8, n_views: usize) -> Result<Vec<Viewpoint>> {
    let cells = pattern_cells(pattern_id)?;
    Ok(cells.iter().cycle().take(n_views).map(|&(r, c)| sector.cell_center(3, 3, r, c)).collect())
}

/// First candidate of maximal gain.
pub fn select_next_view(candidates: &[Viewpoint], reports: &[GainReport]) -> Result<(Viewpoint, usize)> {
    if candidates.is_empty() || reports.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if candidates.len() != reports.len() {
        return Err(Error::InvalidConfig(format!("{} candidates but {} gain reports", candidates.len(), reports.len())));
    }
    let mut best = 0;
    for (i, r) in reports.iter().enumerate().skip(1) {
        if r.gain > reports[best].gain {
            best = i;
        }
    }
    Ok((candidates[best], best))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Nbv(RegionOfInterest),
    Predefined(u8),
    Random,
}

impl PlannerKind {
    /// Stable label, e.g. `nbv_leaf_nodes`, `predefined-2`, `random`.
    pub fn label(&self) -> String {
        match self {
            Self::Nbv(roi) => format!("nbv_{}", roi.name),
            Self::Predefined(p) => format!("predefined-{p}"),
            Self::Random => "random".into(),
        }
    }
}

/// Everything a trial needs besides the planner choice.
#[derive(Clone, Debug)]
pub struct PlannerSetup<'a> {
    pub scene: &'a BoundingVolumeIndex,
    pub sector: &'a CylindricalSector,
    pub camera: &'a CameraModel,
    pub map_config: &'a MapConfig,
    pub gain: &'a GainSettings,
    pub sampler: &'a SamplerConfig,
    pub max_views: usize,
    pub v0: Viewpoint,
}

/// Gains of every candidate on the current map, reduced in candidate order.
pub fn evaluate_candidates(
    map: &OccupancyMap,
    camera: &CameraModel,
    candidates: &[Viewpoint],
    roi: &RegionOfInterest,
    settings: &GainSettings,
) -> Vec<GainReport> {
    candidates.par_iter().map(|c| expected_gain(map, camera, c, roi, settings)).collect()
}

/// Runs one planner from `v0` for exactly `max_views` views. `on_view` sees
/// the map after each view's insertion (1-based view index).
pub fn run_planner<F>(kind: &PlannerKind, setup: &PlannerSetup<'_>, rng_seed: u64, mut on_view: F) -> Result<TrialTrace>
where
    F: FnMut(usize, &OccupancyMap) -> Result<()>,
{
    if setup.max_views == 0 {
        return Err(Error::InvalidConfig("max_views must be at least 1".into()));
    }
    setup.camera.validate()?;
    setup.gain.validate()?;
    setup.sampler.validate()?;
    setup.sector.validate()?;
    let pattern = match kind {
        PlannerKind::Predefined(p) => Some(predefined_sequence(setup.sector, *p, setup.max_views - 1)?),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x6e6f_6973_655f_7267);
    let mut map = OccupancyMap::new(setup.map_config.clone())?;
    let mut trace = TrialTrace { planner: kind.label(), rng_seed, views: Vec::with_capacity(setup.max_views) };
    let mut current = ViewRecord::new(1, setup.v0);
    for view in 1..=setup.max_views {
        let mut depth = render_depth(setup.scene, setup.camera, &current.viewpoint);
        if setup.camera.depth_noise_std > 0.0 {
            depth.add_noise(setup.camera.depth_noise_std, setup.camera.max_range, &mut noise_rng);
        }
        let cloud = depth_to_cloud(&depth, setup.camera, &current.viewpoint);
        map.insert_cloud(&current.viewpoint.position, &cloud, setup.camera.max_range)?;
        on_view(view, &map)?;
        let next_index = view + 1;
        trace.views.push(current);
        if view == setup.max_views {
            break;
        }
        current = match kind {
            PlannerKind::Nbv(roi) => {
                let candidates = sample_candidates_with(setup.sector, setup.sampler, &mut rng);
                let reports = evaluate_candidates(&map, setup.camera, &candidates, roi, setup.gain);
                let (chosen, index) = select_next_view(&candidates, &reports)?;
                let mut record = ViewRecord::new(next_index, chosen);
                record.chosen_gain = Some(reports[index].gain);
                record.chosen_candidate = Some(index);
                record.candidate_gains = reports.iter().enumerate().map(|(i, r)| CandidateGain::from_report(i, r)).collect();
                record
            }
            PlannerKind::Predefined(_) => {
                let seq = pattern.as_ref().expect("pattern resolved above");
                ViewRecord::new(next_index, seq[view - 1])
            }
            PlannerKind::Random => {
                let candidates = sample_candidates_with(setup.sector, setup.sampler, &mut rng);
                let index = rng.random_range(0..candidates.len());
                let mut record = ViewRecord::new(next_index, candidates[index]);
                record.chosen_candidate = Some(index);
                record
            }
        };
    }
    Ok(trace)
}
