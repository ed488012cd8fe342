//! Scene generation, rendering and the planners, exercised end to end on
//! generated plants.

use std::f64::consts::PI;

use nbv_core::harness::{resolve_rois, BoxSizes, ExperimentConfig};
use nbv_core::mapping::{MapConfig, OccupancyMap};
use nbv_core::planning::{
    predefined_sequence, run_planner, sample_candidates, CylindricalSector, PlannerKind, PlannerSetup, SamplerConfig,
    TrialTrace, PATTERN_COUNT,
};
use nbv_core::scene::{generate_plant, load_mesh, BasePose, BoundingVolumeIndex, PlantSpec};
use nbv_core::sensor::{depth_to_cloud, render_depth};
use nbv_core::{Error, Point3, RegionOfInterest};

fn plant(seed: u64) -> (BoundingVolumeIndex, nbv_core::scene::PlantMetadata) {
    let (mesh, meta) = generate_plant(&PlantSpec::for_model(seed, 0.0, BasePose::default())).unwrap();
    (BoundingVolumeIndex::build(mesh), meta)
}

fn angle_about_axis(sector: &CylindricalSector, p: &Point3) -> f64 {
    let d = p - sector.axis_point;
    d.y.atan2(d.x).rem_euclid(2.0 * PI)
}

#[test]
fn generated_plant_survives_obj_round_trip() {
    let (index, _) = plant(2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plant.obj");
    index.mesh().write_obj(&path).unwrap();
    let loaded = load_mesh(&path).unwrap();
    assert_eq!(loaded.triangles, index.mesh().triangles);
    assert_eq!(loaded.vertices.len(), index.mesh().vertices.len());
    for (a, b) in loaded.vertices.iter().zip(&index.mesh().vertices) {
        assert!((a - b).norm() < 1e-9);
    }
    assert_eq!(loaded.part_labels, index.mesh().part_labels);
}

#[test]
fn rendered_depths_agree_with_independent_ray_casts() {
    let (index, _) = plant(1);
    let cfg = ExperimentConfig::default();
    let camera = cfg.camera.clone();
    let view = cfg.initial_viewpoint().unwrap();
    let depth = render_depth(&index, &camera, &view);
    assert!(depth.hit_count() > 100, "initial view sees the plant: {} hits", depth.hit_count());
    for v in 0..camera.image_height {
        for u in 0..camera.image_width {
            let dir = view.to_world(&camera.pixel_direction(u, v));
            let expected = index.cast_ray(&view.position, &dir, camera.max_range).map_or(f64::INFINITY, |h| h.distance);
            assert_eq!(depth.at(u, v), expected, "pixel ({u}, {v})");
        }
    }
    let cloud = depth_to_cloud(&depth, &camera, &view);
    assert_eq!(cloud.len(), depth.hit_count());
    for p in cloud.iter() {
        assert!((p - view.position).norm() <= camera.max_range + 1e-9);
    }
}

#[test]
fn candidates_fill_every_cell_on_the_sector_surface() {
    let sector = CylindricalSector::default();
    let cfg = SamplerConfig::default();
    let candidates = sample_candidates(&sector, &cfg);
    assert_eq!(candidates.len(), 27);
    assert_eq!(cfg.candidate_count(), 27);
    let (lo, hi) = (sector.min_angle(), sector.min_angle() + sector.sector_angle);
    for (n, c) in candidates.iter().enumerate() {
        let (r, h) = sector.cylindrical_coordinates(&c.position);
        assert!((r - 0.4).abs() < 1e-12);
        assert!((0.0..=0.7).contains(&h));
        let a = angle_about_axis(&sector, &c.position);
        assert!(a >= lo - 1e-12 && a <= hi + 1e-12, "angle {a} outside [{lo}, {hi}]");
        // Samples are drawn cell by cell in row-major order.
        let cell = n / 3;
        let ((a0, a1), (h0, h1)) = sector.cell_bounds(3, 3, cell / 3, cell % 3);
        assert!(a >= a0 - 1e-12 && a <= a1 + 1e-12 && h >= h0 - 1e-12 && h <= h1 + 1e-12);
        // Level gaze at the stem axis.
        let gaze = (sector.axis_at(h) - c.position).normalize();
        assert!((c.optical_axis() - gaze).norm() < 1e-9);
    }
    assert_eq!(candidates, sample_candidates(&sector, &cfg));
    assert_ne!(candidates, sample_candidates(&sector, &SamplerConfig { rng_seed: 1, ..cfg }));
}

#[test]
fn predefined_patterns_visit_every_cell_once_per_cycle() {
    let sector = CylindricalSector::default();
    for p in 1..=PATTERN_COUNT {
        let seq = predefined_sequence(&sector, p, 18).unwrap();
        let mut first: Vec<_> = seq[..9].iter().map(|v| sector.cylindrical_coordinates(&v.position).1).collect();
        first.sort_by(f64::total_cmp);
        assert_eq!(seq[..9], seq[9..], "pattern {p} cycles");
        for k in 0..9 {
            for j in k + 1..9 {
                assert!((seq[k].position - seq[j].position).norm() > 0.05, "pattern {p} repeats a cell");
            }
        }
        // Three views per height band.
        for band in first.chunks(3) {
            assert!(band.iter().all(|h| (h - band[0]).abs() < 1e-12));
        }
    }
    assert!(matches!(predefined_sequence(&sector, 0, 3), Err(Error::UnknownPattern(0))));
    assert!(matches!(predefined_sequence(&sector, PATTERN_COUNT + 1, 3), Err(Error::UnknownPattern(_))));
}

struct Fixture {
    index: BoundingVolumeIndex,
    meta: nbv_core::scene::PlantMetadata,
    cfg: ExperimentConfig,
    sector: CylindricalSector,
}

impl Fixture {
    fn new(seed: u64) -> Self {
        let (index, meta) = plant(seed);
        let cfg = ExperimentConfig::default();
        let sector = cfg.sector().unwrap();
        Self { index, meta, cfg, sector }
    }

    fn setup(&self, max_views: usize) -> PlannerSetup<'_> {
        PlannerSetup {
            scene: &self.index,
            sector: &self.sector,
            camera: &self.cfg.camera,
            map_config: &self.cfg.map,
            gain: &self.cfg.gain,
            sampler: &self.cfg.sampler,
            max_views,
            v0: self.cfg.initial_viewpoint().unwrap(),
        }
    }

    fn run(&self, kind: &PlannerKind, max_views: usize, seed: u64) -> TrialTrace {
        run_planner(kind, &self.setup(max_views), seed, |_, _| Ok(())).unwrap()
    }
}

#[test]
fn single_view_budget_only_observes_the_initial_view() {
    let f = Fixture::new(0);
    let mut calls = Vec::new();
    let kind = PlannerKind::Nbv(RegionOfInterest::none());
    let trace = run_planner(&kind, &f.setup(1), 7, |view, map| {
        calls.push((view, map.len()));
        Ok(())
    })
    .unwrap();
    assert_eq!(trace.views.len(), 1);
    assert_eq!(calls.len(), 1);
    assert!(calls[0].1 > 0);
    assert_eq!(trace.views[0].viewpoint, f.cfg.initial_viewpoint().unwrap());
    assert!(trace.views[0].candidate_gains.is_empty());
    assert!(matches!(run_planner(&kind, &f.setup(0), 7, |_, _| Ok(())), Err(Error::InvalidConfig(_))));
}

#[test]
fn random_planner_is_reproducible_per_seed() {
    let f = Fixture::new(0);
    let a = f.run(&PlannerKind::Random, 4, 99);
    let b = f.run(&PlannerKind::Random, 4, 99);
    let c = f.run(&PlannerKind::Random, 4, 100);
    assert_eq!(a.viewpoints(), b.viewpoints());
    assert_ne!(a.viewpoints(), c.viewpoints());
}

#[test]
fn predefined_planner_follows_its_pattern_after_the_initial_view() {
    let f = Fixture::new(0);
    let trace = f.run(&PlannerKind::Predefined(2), 4, 0);
    let seq = predefined_sequence(&f.sector, 2, 3).unwrap();
    assert_eq!(trace.views[1..].iter().map(|v| v.viewpoint).collect::<Vec<_>>(), seq);
}

#[test]
fn leaf_node_attention_finds_positive_gain_and_certifies_each_step() {
    let f = Fixture::new(4);
    let roi = resolve_rois(&f.meta, "leaf_nodes", &BoxSizes::default()).unwrap();
    let trace = f.run(&PlannerKind::Nbv(roi), 3, 5);
    assert_eq!(trace.planner, "nbv_leaf_nodes");
    for record in &trace.views[1..] {
        assert!(record.chosen_gain.unwrap() > 0.0);
        assert_eq!(record.candidate_gains.len(), 27);
        assert!(record.argmax_certified());
        let best = record.chosen_candidate.unwrap();
        assert_eq!(record.candidate_gains[best].gain, record.chosen_gain.unwrap());
        assert!(record.candidate_gains[..best].iter().all(|c| c.gain < record.chosen_gain.unwrap()));
    }
    let restored = TrialTrace::from_json(&trace.to_json().unwrap()).unwrap();
    assert_eq!(restored.views.len(), trace.views.len());
    for (a, b) in restored.views.iter().zip(&trace.views) {
        assert!((a.viewpoint.position - b.viewpoint.position).norm() < 1e-12);
        assert!(a.viewpoint.orientation.angle_to(&b.viewpoint.orientation) < 1e-9);
        assert_eq!(a.candidate_gains, b.candidate_gains);
    }
    let table = trace.gain_table_csv();
    assert_eq!(table.lines().count(), 1 + 2 * 27);
}

#[test]
fn attention_restricts_gain_to_the_region() {
    let f = Fixture::new(3);
    let mut map = OccupancyMap::new(MapConfig::default()).unwrap();
    let v0 = f.cfg.initial_viewpoint().unwrap();
    let cloud = depth_to_cloud(&render_depth(&f.index, &f.cfg.camera, &v0), &f.cfg.camera, &v0);
    map.insert_cloud(&v0.position, &cloud, f.cfg.camera.max_range).unwrap();
    let candidates = sample_candidates(&f.sector, &f.cfg.sampler);
    let sizes = BoxSizes::default();
    let whole = resolve_rois(&f.meta, "whole_plant", &sizes).unwrap();
    let leaves = resolve_rois(&f.meta, "leaf_nodes", &sizes).unwrap();
    for c in &candidates {
        let all = nbv_core::gain::expected_gain(&map, &f.cfg.camera, c, &RegionOfInterest::none(), &f.cfg.gain);
        let w = nbv_core::gain::expected_gain(&map, &f.cfg.camera, c, &whole, &f.cfg.gain);
        let l = nbv_core::gain::expected_gain(&map, &f.cfg.camera, c, &leaves, &f.cfg.gain);
        assert!(l.gain <= w.gain && w.gain <= all.gain);
        assert!(l.roi_voxel_count < w.roi_voxel_count);
    }
}
