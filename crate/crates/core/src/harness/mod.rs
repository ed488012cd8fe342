//! Study orchestration: scene preparation, planner trials, metric rows,
//! aggregation, sweeps and on-disk artifacts.

mod aggregate;
mod config;
mod plot;

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::metrics::{trim_cloud, EvaluationTarget, ViewMetrics};
use crate::planning::{run_planner, PlannerKind, PlannerSetup, TrialTrace};
use crate::roi::{Aabb, RegionOfInterest};
use crate::scene::{generate_plant, sample_ground_truth, BoundingVolumeIndex, PlantMetadata, PlantSpec, TriangleMesh};
use crate::Vector3;

pub use aggregate::{
    mean_ci, median, parse_trials_csv, trials_to_csv, AggregateResult, SummaryRow, ThresholdRow, TrialFailure, TrialRow,
    SUMMARY_HEADER, THRESHOLDS_HEADER, TRIALS_HEADER,
};
pub use config::{
    BoxSizes, ExperimentConfig, GroundTruthConfig, PlannerChoice, PoseConfig, SectorConfig, SweepConfig, ATTENTION_TARGETS,
};
pub use plot::{emit_plots, render_svg, PlotMetric};

/// Attention region for `target` on a plant. Whole-plant and main-stem boxes
/// sit on the stem axis with their bottom face at the stem base; leaf-node
/// boxes are centered on the lowest, middle and highest node.
pub fn resolve_rois(metadata: &PlantMetadata, target: &str, sizes: &BoxSizes) -> Result<RegionOfInterest> {
    let column = |size: [f64; 3]| {
        let center = metadata.stem_base + metadata.stem_axis() * (0.5 * size[2]);
        Aabb::new(center, Vector3::from(size))
    };
    match target {
        "none" => Ok(RegionOfInterest::none()),
        "whole_plant" => Ok(RegionOfInterest::new(target, vec![column(sizes.whole_plant)])),
        "main_stem" => Ok(RegionOfInterest::new(target, vec![column(sizes.main_stem)])),
        "leaf_nodes" => {
            let n = metadata.leaf_nodes.len();
            if n < 3 {
                return Err(Error::InsufficientNodes(n));
            }
            let boxes = [0, (n - 1) / 2, n - 1]
                .iter()
                .map(|&i| Aabb::new(metadata.leaf_nodes[i], Vector3::from(sizes.leaf_node)))
                .collect();
            Ok(RegionOfInterest::new(target, boxes))
        }
        other => Err(Error::UnknownRoi(other.into())),
    }
}

/// Deterministic per-trial seed from the master seed and the trial identity.
/// The attention target is not part of it: a trajectory does not depend on
/// which target it is evaluated against.
pub fn trial_seed(master_seed: u64, plant_seed: u64, orientation_deg: f64, planner: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    let bytes = master_seed
        .to_le_bytes()
        .into_iter()
        .chain(plant_seed.to_le_bytes())
        .chain(orientation_deg.to_bits().to_le_bytes())
        .chain(planner.bytes());
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    // SplitMix64 finalizer for avalanche.
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Evaluation regions of one attention target: one per box, or the whole
/// cloud for `none`.
struct AttentionTarget {
    name: String,
    parts: Vec<(RegionOfInterest, EvaluationTarget)>,
}

impl AttentionTarget {
    /// Per-part metrics averaged over parts.
    fn evaluate(&self, reconstruction: &PointCloud) -> ViewMetrics {
        let per_part: Vec<ViewMetrics> =
            self.parts.iter().map(|(roi, target)| target.evaluate(&trim_cloud(reconstruction, roi))).collect();
        ViewMetrics::mean(&per_part)
    }
}

/// A generated plant instance with its ray-casting index and evaluation targets.
pub struct PreparedScene {
    pub plant_seed: u64,
    pub orientation_deg: f64,
    pub metadata: PlantMetadata,
    pub index: BoundingVolumeIndex,
    pub ground_truth: PointCloud,
    targets: Vec<AttentionTarget>,
}

impl PreparedScene {
    pub fn new(cfg: &ExperimentConfig, plant_seed: u64, orientation_deg: f64) -> Result<Self> {
        let spec = PlantSpec::for_model(plant_seed, cfg.leaflet_removal_fraction, cfg.base_pose(orientation_deg)?);
        let (mesh, metadata) = generate_plant(&spec)?;
        let ground_truth = sample_ground_truth(&mesh, cfg.ground_truth.samples_per_m2, cfg.ground_truth.voxel_size)?;
        let rho = cfg.metrics.distance_threshold;
        let mut targets = Vec::new();
        for name in &cfg.attention {
            let roi = resolve_rois(&metadata, name, &cfg.boxes)?;
            let pieces = if roi.is_unfiltered() { vec![roi] } else { roi.split() };
            let parts = pieces
                .into_iter()
                .map(|r| {
                    let truth = trim_cloud(&ground_truth, &r);
                    if truth.is_empty() {
                        return Err(Error::InvalidSpec(format!("ground truth inside '{}' is empty", r.name)));
                    }
                    Ok((r, EvaluationTarget::new(truth, rho)?))
                })
                .collect::<Result<Vec<_>>>()?;
            targets.push(AttentionTarget { name: name.clone(), parts });
        }
        let index = BoundingVolumeIndex::build(mesh);
        Ok(Self { plant_seed, orientation_deg, metadata, index, ground_truth, targets })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.index.mesh()
    }

    /// Metrics of a reconstruction against every configured attention target.
    pub fn evaluate(&self, reconstruction: &PointCloud) -> Vec<(String, ViewMetrics)> {
        self.targets.iter().map(|t| (t.name.clone(), t.evaluate(reconstruction))).collect()
    }
}

/// Result of one planner run on one scene.
pub struct TrialOutcome {
    pub trace: TrialTrace,
    pub rows: Vec<TrialRow>,
}

/// Runs one planner on a prepared scene and evaluates every view against
/// every attention target.
pub fn run_trial(cfg: &ExperimentConfig, scene: &PreparedScene, choice: &PlannerChoice) -> Result<TrialOutcome> {
    let kind = match choice {
        PlannerChoice::Nbv(target) => PlannerKind::Nbv(resolve_rois(&scene.metadata, target, &cfg.boxes)?),
        PlannerChoice::Predefined(p) => PlannerKind::Predefined(*p),
        PlannerChoice::Random => PlannerKind::Random,
    };
    let label = choice.label();
    let sector = cfg.sector()?;
    let setup = PlannerSetup {
        scene: &scene.index,
        sector: &sector,
        camera: &cfg.camera,
        map_config: &cfg.map,
        gain: &cfg.gain,
        sampler: &cfg.sampler,
        max_views: cfg.max_views,
        v0: cfg.initial_viewpoint()?,
    };
    let seed = trial_seed(cfg.master_seed, scene.plant_seed, scene.orientation_deg, &label);
    let mut rows = Vec::with_capacity(cfg.max_views * cfg.attention.len());
    let trace = run_planner(&kind, &setup, seed, |view, map| {
        let recon = map.export_occupied_cloud();
        for (attention, metrics) in scene.evaluate(&recon) {
            rows.push(TrialRow {
                planner: label.clone(),
                plant_seed: scene.plant_seed,
                orientation_deg: scene.orientation_deg,
                attention,
                view,
                metrics,
            });
        }
        Ok(())
    })?;
    // Rows grouped by attention, then view.
    let order = |a: &str| cfg.attention.iter().position(|x| x == a).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (order(&r.attention), r.view));
    Ok(TrialOutcome { trace, rows })
}

/// Everything produced for one scene.
struct SceneResult {
    plant_seed: u64,
    orientation_deg: f64,
    scene: Option<(PointCloud, PlantMetadata)>,
    trials: Vec<(PlannerChoice, Result<TrialOutcome>)>,
}

fn run_scene(cfg: &ExperimentConfig, choices: &[PlannerChoice], plant_seed: u64, orientation_deg: f64) -> SceneResult {
    let started = Instant::now();
    let scene = match PreparedScene::new(cfg, plant_seed, orientation_deg) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("plant {plant_seed} at {orientation_deg}°: scene preparation failed: {e}");
            let msg = e.to_string();
            return SceneResult {
                plant_seed,
                orientation_deg,
                scene: None,
                trials: choices.iter().map(|c| (c.clone(), Err(Error::InvalidSpec(msg.clone())))).collect(),
            };
        }
    };
    let trials = choices.iter().map(|c| (c.clone(), run_trial(cfg, &scene, c))).collect();
    log::info!(
        "plant {plant_seed} at {orientation_deg}°: {} planners in {:.1} s",
        choices.len(),
        started.elapsed().as_secs_f64()
    );
    SceneResult { plant_seed, orientation_deg, scene: Some((scene.ground_truth, scene.metadata)), trials }
}

fn file_stem(plant_seed: u64, orientation_deg: f64) -> String {
    format!("plant{plant_seed}_yaw{orientation_deg}")
}

/// Runs every planner on every (plant seed × orientation) scene, writes the
/// per-trial table, traces, ground truth, summary tables and plots below
/// `cfg.output_dir`, and returns the aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    cfg.validate()?;
    let choices = cfg.planner_choices()?;
    let cells: Vec<(u64, f64)> =
        cfg.plant_seeds.iter().flat_map(|&s| cfg.orientations_deg.iter().map(move |&o| (s, o))).collect();
    let run_all = || cells.par_iter().map(|&(s, o)| run_scene(cfg, &choices, s, o)).collect::<Vec<_>>();
    let results = if cfg.workers == 0 {
        run_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(run_all)
    };

    // Single collector: all writes happen here, in scene order.
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.json"), cfg.to_json()?)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        if let (true, Some((gt, meta))) = (cfg.write_groundtruth, &r.scene) {
            let dir = out.join("groundtruth");
            std::fs::create_dir_all(&dir)?;
            let stem = file_stem(r.plant_seed, r.orientation_deg);
            gt.write_ply(&dir.join(format!("{stem}.ply")))?;
            std::fs::write(dir.join(format!("{stem}.json")), meta.to_json()?)?;
        }
        for (choice, outcome) in r.trials {
            match outcome {
                Ok(t) => {
                    if cfg.write_traces {
                        let dir = out.join("traces");
                        std::fs::create_dir_all(&dir)?;
                        let name = format!("{}_{}.json", choice.label(), file_stem(r.plant_seed, r.orientation_deg));
                        std::fs::write(dir.join(name), t.trace.to_json()?)?;
                    }
                    rows.extend(t.rows);
                }
                Err(e) => failures.push(TrialFailure {
                    planner: choice.label(),
                    plant_seed: r.plant_seed,
                    orientation_deg: r.orientation_deg,
                    message: e.to_string(),
                }),
            }
        }
    }
    std::fs::write(out.join("trials.csv"), trials_to_csv(&rows))?;
    let mut agg = AggregateResult::from_trials(&rows, &cfg.metrics.accuracy_thresholds, cfg.max_views);
    agg.failures = failures;
    std::fs::write(out.join("summary.csv"), agg.summary_csv())?;
    std::fs::write(out.join("thresholds.csv"), agg.thresholds_csv())?;
    std::fs::write(out.join("failures.csv"), agg.failures_csv())?;
    if !agg.summary.is_empty() {
        emit_plots(&agg, &out.join("plots"))?;
    }
    Ok(agg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Occlusion,
    Candidates,
    Resolution,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "occlusion" => Ok(Self::Occlusion),
            "candidates" => Ok(Self::Candidates),
            "resolution" => Ok(Self::Resolution),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis '{other}'"))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Occlusion => "occlusion",
            Self::Candidates => "candidates",
            Self::Resolution => "resolution",
        }
    }

    /// Per-level configs: `(level label, config)`. Each level writes into its
    /// own subdirectory of the base output directory.
    pub fn levels(self, cfg: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let base = cfg.output_dir.join(format!("sweep_{}", self.name()));
        let with = |label: String, mut c: ExperimentConfig| {
            c.output_dir = base.join(&label);
            (label, c)
        };
        match self {
            Self::Occlusion => cfg
                .sweeps
                .occlusion
                .iter()
                .map(|&f| with(format!("removal_{f}"), ExperimentConfig { leaflet_removal_fraction: f, ..cfg.clone() }))
                .collect(),
            Self::Candidates => cfg
                .sweeps
                .samples_per_cell
                .iter()
                .map(|&k| {
                    let mut c = cfg.clone();
                    c.sampler.samples_per_cell = k;
                    with(format!("candidates_{}", c.sampler.candidate_count()), c)
                })
                .collect(),
            Self::Resolution => cfg
                .sweeps
                .resolution
                .iter()
                .map(|&r| {
                    let mut c = cfg.clone();
                    c.map.resolution = r;
                    c.metrics.distance_threshold = r;
                    c.ground_truth.voxel_size = r;
                    with(format!("resolution_{r}"), c)
                })
                .collect(),
        }
    }
}

/// Repeats the experiment once per level of `axis`, all else fixed.
pub fn run_sweep(cfg: &ExperimentConfig, axis: SweepAxis) -> Result<Vec<(String, AggregateResult)>> {
    axis.levels(cfg).into_iter().map(|(label, c)| Ok((label, run_experiment(&c)?))).collect()
}

/// Loads a summary table and writes its plots next to it in `plots/`.
pub fn plot_summary(summary_csv: &Path, out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    emit_plots(&AggregateResult::read_summary(summary_csv)?, out_dir)
}
