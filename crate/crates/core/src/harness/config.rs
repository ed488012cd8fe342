use std::path::{Path, PathBuf};

use nalgebra::{Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainSettings;
use crate::mapping::MapConfig;
use crate::metrics::MetricsConfig;
use crate::planning::{CylindricalSector, SamplerConfig, PATTERN_COUNT};
use crate::scene::{BasePose, DEFAULT_SAMPLES_PER_M2};
use crate::sensor::{CameraModel, Viewpoint};
use crate::{Point3, Vector3};

/// Position plus `[x, y, z, w]` quaternion in the world frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseConfig {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl PoseConfig {
    fn rotation(&self) -> Result<UnitQuaternion<f64>> {
        let [x, y, z, w] = self.orientation;
        let q = Quaternion::new(w, x, y, z);
        if !(q.norm() > 0.0) || !q.norm().is_finite() {
            return Err(Error::InvalidConfig("pose quaternion must be nonzero and finite".into()));
        }
        // Tabulated quaternions carry three significant digits; renormalize.
        Ok(UnitQuaternion::new_normalize(q))
    }

    pub fn point(&self) -> Point3 {
        Point3::from(self.position)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SectorConfig {
    /// Meters.
    pub radius: f64,
    /// Meters.
    pub height: f64,
    /// Full opening angle 2θ in degrees.
    pub sector_angle_deg: f64,
    /// Bisector direction about the stem axis, degrees from world +x.
    pub angular_center_deg: f64,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self { radius: 0.4, height: 0.7, sector_angle_deg: 90.0, angular_center_deg: 180.0 }
    }
}

/// Attention box extents in meters (x, y, z).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxSizes {
    pub whole_plant: [f64; 3],
    pub main_stem: [f64; 3],
    pub leaf_node: [f64; 3],
}

impl Default for BoxSizes {
    fn default() -> Self {
        Self { whole_plant: [0.3, 0.3, 0.7], main_stem: [0.05, 0.05, 0.7], leaf_node: [0.03, 0.03, 0.05] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundTruthConfig {
    pub samples_per_m2: f64,
    /// Voxel-grid filter size in meters.
    pub voxel_size: f64,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self { samples_per_m2: DEFAULT_SAMPLES_PER_M2, voxel_size: 0.003 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub occlusion: Vec<f64>,
    /// Candidates per grid cell; 1, 3, 5 give 9, 27, 45 candidates.
    pub samples_per_cell: Vec<usize>,
    /// Map resolutions in meters; ρ and the ground-truth voxel follow.
    pub resolution: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { occlusion: vec![0.0, 0.5], samples_per_cell: vec![1, 3, 5], resolution: vec![0.003, 0.005, 0.007] }
    }
}

/// Complete study description. Every field has a default; the defaults are
/// the desk-scale study (5 plant models × 6 orientations).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub plant_seeds: Vec<u64>,
    /// Plant yaw offsets in degrees.
    pub orientations_deg: Vec<f64>,
    /// `nbv_<target>`, `predefined` (all patterns), `predefined-<k>`, `random`.
    pub planners: Vec<String>,
    /// Evaluation targets: `whole_plant`, `main_stem`, `leaf_nodes`, `none`.
    pub attention: Vec<String>,
    pub max_views: usize,
    pub leaflet_removal_fraction: f64,
    pub plant_base: PoseConfig,
    /// Initial camera pose in the x-forward link convention.
    pub initial_view: PoseConfig,
    pub sector: SectorConfig,
    pub sampler: SamplerConfig,
    pub camera: CameraModel,
    pub map: MapConfig,
    pub gain: GainSettings,
    pub boxes: BoxSizes,
    pub ground_truth: GroundTruthConfig,
    pub metrics: MetricsConfig,
    pub sweeps: SweepConfig,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub write_traces: bool,
    pub write_groundtruth: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            plant_seeds: (0..5).collect(),
            orientations_deg: (0..6).map(|k| 60.0 * k as f64).collect(),
            planners: ["nbv_whole_plant", "nbv_main_stem", "nbv_leaf_nodes", "predefined", "random"]
                .map(String::from)
                .to_vec(),
            attention: ["whole_plant", "main_stem", "leaf_nodes"].map(String::from).to_vec(),
            max_views: 10,
            leaflet_removal_fraction: 0.0,
            plant_base: PoseConfig { position: [1.0, 0.0, 0.8], orientation: [0.0, 0.0, 0.0, 1.0] },
            initial_view: PoseConfig { position: [0.646, 0.353, 1.383], orientation: [0.0, 0.0, -0.383, 0.924] },
            sector: SectorConfig::default(),
            sampler: SamplerConfig::default(),
            camera: CameraModel::default(),
            map: MapConfig::default(),
            gain: GainSettings::default(),
            boxes: BoxSizes::default(),
            ground_truth: GroundTruthConfig::default(),
            metrics: MetricsConfig::default(),
            sweeps: SweepConfig::default(),
            master_seed: 0,
            output_dir: PathBuf::from("out"),
            workers: 0,
            write_traces: true,
            write_groundtruth: true,
        }
    }
}

/// A planner entry resolved from its config label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlannerChoice {
    Nbv(String),
    Predefined(u8),
    Random,
}

impl PlannerChoice {
    pub fn label(&self) -> String {
        match self {
            Self::Nbv(target) => format!("nbv_{target}"),
            Self::Predefined(p) => format!("predefined-{p}"),
            Self::Random => "random".into(),
        }
    }

    /// Planner family used for aggregation: patterns collapse to `predefined`.
    pub fn family(label: &str) -> &str {
        if label.starts_with("predefined") {
            "predefined"
        } else {
            label
        }
    }
}

pub const ATTENTION_TARGETS: [&str; 4] = ["whole_plant", "main_stem", "leaf_nodes", "none"];

impl ExperimentConfig {
    /// The full replica: 10 plant models × 12 orientations at 30° steps.
    pub fn paper() -> Self {
        Self {
            plant_seeds: (0..10).collect(),
            orientations_deg: (0..12).map(|k| 30.0 * k as f64).collect(),
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.plant_seeds.is_empty() || self.orientations_deg.is_empty() {
            return Err(Error::InvalidConfig("at least one plant seed and orientation required".into()));
        }
        if self.max_views == 0 {
            return Err(Error::InvalidConfig("max_views must be at least 1".into()));
        }
        if self.attention.is_empty() {
            return Err(Error::InvalidConfig("at least one attention target required".into()));
        }
        for a in &self.attention {
            if !ATTENTION_TARGETS.contains(&a.as_str()) {
                return Err(Error::UnknownRoi(a.clone()));
            }
        }
        if !(0.0..=1.0).contains(&self.leaflet_removal_fraction) {
            return Err(Error::InvalidConfig("leaflet removal fraction must lie in [0, 1]".into()));
        }
        if !(self.ground_truth.samples_per_m2 > 0.0) || !(self.ground_truth.voxel_size > 0.0) {
            return Err(Error::InvalidConfig("ground-truth density and voxel size must be positive".into()));
        }
        self.planner_choices()?;
        self.camera.validate()?;
        self.map.validate()?;
        self.gain.validate()?;
        self.sampler.validate()?;
        self.metrics.validate()?;
        self.sector()?.validate()?;
        self.initial_viewpoint()?;
        self.base_yaw()?;
        Ok(())
    }

    /// Planner labels expanded (`predefined` → four patterns), in config order.
    pub fn planner_choices(&self) -> Result<Vec<PlannerChoice>> {
        if self.planners.is_empty() {
            return Err(Error::InvalidConfig("at least one planner required".into()));
        }
        let mut out = Vec::new();
        for label in &self.planners {
            match label.as_str() {
                "random" => out.push(PlannerChoice::Random),
                "predefined" => out.extend((1..=PATTERN_COUNT).map(PlannerChoice::Predefined)),
                l => {
                    if let Some(target) = l.strip_prefix("nbv_") {
                        if !ATTENTION_TARGETS.contains(&target) {
                            return Err(Error::UnknownRoi(target.into()));
                        }
                        out.push(PlannerChoice::Nbv(target.into()));
                    } else if let Some(k) = l.strip_prefix("predefined-") {
                        let k: u8 = k.parse().map_err(|_| Error::InvalidConfig(format!("bad pattern in planner '{l}'")))?;
                        if !(1..=PATTERN_COUNT).contains(&k) {
                            return Err(Error::UnknownPattern(k));
                        }
                        out.push(PlannerChoice::Predefined(k));
                    } else {
                        return Err(Error::InvalidConfig(format!("unknown planner '{l}'")));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn sector(&self) -> Result<CylindricalSector> {
        let axis = self.plant_base.rotation()? * Vector3::z();
        Ok(CylindricalSector {
            axis_point: self.plant_base.point(),
            axis,
            radius: self.sector.radius,
            height: self.sector.height,
            sector_angle: self.sector.sector_angle_deg.to_radians(),
            angular_center: self.sector.angular_center_deg.to_radians(),
        })
    }

    pub fn initial_viewpoint(&self) -> Result<Viewpoint> {
        Ok(Viewpoint::from_x_forward(self.initial_view.point(), self.initial_view.rotation()?))
    }

    /// Yaw of the configured plant base orientation. Only rotations about
    /// world +z are supported.
    pub fn base_yaw(&self) -> Result<f64> {
        let q = self.plant_base.rotation()?;
        let (roll, pitch, yaw) = q.euler_angles();
        if roll.abs() > 1e-9 || pitch.abs() > 1e-9 {
            return Err(Error::InvalidConfig("plant base orientation must be a rotation about +z".into()));
        }
        Ok(yaw)
    }

    pub fn base_pose(&self, orientation_deg: f64) -> Result<BasePose> {
        Ok(BasePose { position: self.plant_base.point(), yaw: self.base_yaw()? + orientation_deg.to_radians() })
    }
}
