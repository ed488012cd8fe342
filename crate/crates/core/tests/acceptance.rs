//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails that is not listed in `KNOWN_SHORTFALLS`.
//!
//! The study criteria run the full desk-scale study (5 plants × 6 yaws), twice
//! for the determinism check, plus the candidate-count and resolution sweeps.
//! Expect roughly 20 minutes on a single core.

use std::path::Path;
use std::time::{Duration, Instant};

use nbv_core::gain::voxel_entropy;
use nbv_core::harness::{run_experiment, AggregateResult, ExperimentConfig, PreparedScene, SweepAxis};
use nbv_core::mapping::{logit, MapConfig, OccupancyMap, VoxelIndex};
use nbv_core::metrics::{chamfer_distance, f1_score};
use nbv_core::planning::{evaluate_candidates, sample_candidates, select_next_view};
use nbv_core::sensor::{depth_to_cloud, render_depth};
use nbv_core::verify;
use nbv_core::{Point3, PointCloud, RegionOfInterest};

/// Criteria that do not hold on the procedural plants, with the measured
/// shortfall recorded alongside the study results. They still print FAIL.
const KNOWN_SHORTFALLS: &[u32] = &[8];

const ORACLE_SEED: u64 = 20_240_601;

struct Gate {
    failed: Vec<u32>,
    passed: usize,
}

impl Gate {
    fn report(&mut self, id: u32, title: &str, ok: bool, detail: String) {
        let status = match (ok, KNOWN_SHORTFALLS.contains(&id)) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known shortfall)",
        };
        println!("[{status}] {id:>2}. {title}: {detail}");
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn suite_detail(r: &verify::SuiteReport) -> String {
    let mut s = format!(
        "{} cases, {} mismatches, max error {:.1e}, {:.2} s",
        r.cases,
        r.mismatches,
        r.max_error,
        r.elapsed.as_secs_f64()
    );
    for note in &r.notes {
        s.push_str("; ");
        s.push_str(note);
    }
    s
}

fn entropy(gate: &mut Gate) {
    let h = |p| voxel_entropy(p).unwrap();
    let expected = 0.881_290_899_230_692_7;
    let ok = h(0.5) == 1.0 && h(0.0) == 0.0 && h(1.0) == 0.0 && (h(0.7) - expected).abs() < 1e-12;
    gate.report(1, "entropy reference values", ok, format!("H(0.5)={} H(0)={} H(1)={} H(0.7)={:.15}", h(0.5), h(0.0), h(1.0), h(0.7)));
}

fn fusion(gate: &mut Gate) {
    let mut map = OccupancyMap::new(MapConfig::default()).unwrap();
    let hit = VoxelIndex::new(0, 0, 0);
    let miss = VoxelIndex::new(1, 0, 0);
    let both = VoxelIndex::new(2, 0, 0);
    let hits = VoxelIndex::new(3, 0, 0);
    let misses = VoxelIndex::new(4, 0, 0);
    map.update(&hit, true);
    map.update(&miss, false);
    map.update(&both, true);
    map.update(&both, false);
    let mut hits_to_clamp = None;
    for n in 1..=9 {
        map.update(&hits, true);
        if hits_to_clamp.is_none() && map.log_odds(&hits) == Some(logit(0.97)) {
            hits_to_clamp = Some(n);
        }
    }
    let mut misses_to_clamp = None;
    for n in 1..=20 {
        map.update(&misses, false);
        if misses_to_clamp.is_none() && map.log_odds(&misses) == Some(logit(0.12)) {
            misses_to_clamp = Some(n);
        }
    }
    let p_both = map.occupancy(&both);
    let ok = (map.occupancy(&hit) - 0.7).abs() < 1e-9
        && (map.occupancy(&miss) - 0.4).abs() < 1e-9
        && (p_both - 14.0 / 23.0).abs() < 1e-9
        && hits_to_clamp.is_some_and(|n| n <= 9)
        && map.log_odds(&hits) == Some(logit(0.97))
        && (map.occupancy(&hits) - 0.97).abs() < 1e-12
        && misses_to_clamp.is_some()
        && (map.occupancy(&misses) - 0.12).abs() < 1e-12;
    gate.report(
        2,
        "log-odds fusion",
        ok,
        format!(
            "hit {:.12} miss {:.12} hit+miss {:.10} (14/23 = {:.10}); clamp 0.97 after {} hits, 0.12 after {} misses",
            map.occupancy(&hit),
            map.occupancy(&miss),
            p_both,
            14.0 / 23.0,
            hits_to_clamp.map_or("-".into(), |n| n.to_string()),
            misses_to_clamp.map_or("-".into(), |n| n.to_string()),
        ),
    );
}

fn oracles(gate: &mut Gate) {
    let traversal = verify::traversal_suite(1_000, ORACLE_SEED);
    gate.report(
        3,
        "traversal vs exact enumeration and dense march (16³ grid, step res/50)",
        traversal.passed() && traversal.cases == 1_000 && traversal.elapsed < Duration::from_secs(10),
        suite_detail(&traversal),
    );

    let gain = verify::gain_suite(50, ORACLE_SEED).unwrap();
    gate.report(
        4,
        "expected gain vs brute-force enumeration (50 maps, 8³)",
        gain.passed() && gain.max_error <= 1e-9 && gain.elapsed < Duration::from_secs(30),
        suite_detail(&gain),
    );

    let selection = verify::argmax_suite(100, ORACLE_SEED).unwrap();
    gate.report(
        5,
        "view selection vs literal selection loop (100 sets)",
        selection.passed() && selection.elapsed < Duration::from_secs(10),
        suite_detail(&selection),
    );

    let (metrics, elapsed) = timed(|| {
        let suite = verify::metrics_suite(20, ORACLE_SEED).unwrap();
        let p = Point3::new(0.3, -0.1, 0.2);
        let q = Point3::new(-0.2, 0.4, 0.25);
        let single = chamfer_distance(&PointCloud::new(vec![p]), &PointCloud::new(vec![q])).unwrap();
        let truth = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)]);
        let recon = PointCloud::new(vec![Point3::new(0.0, 0.0, 0.001)]);
        let hand = f1_score(&recon, &truth, 0.01).unwrap();
        (suite, (single - 2.0 * (p - q).norm()).abs(), hand)
    });
    let (suite, single_err, hand) = metrics;
    gate.report(
        6,
        "chamfer/F1 vs brute force, single-point chamfer, hand construction",
        suite.passed()
            && suite.max_error <= 1e-12
            && single_err < 1e-15
            && (hand.precision, hand.recall, hand.f1) == (1.0, 0.5, 2.0 / 3.0)
            && elapsed < Duration::from_secs(10),
        format!(
            "{}; single-point error {single_err:.1e}; hand construction P={} R={} F1={}",
            suite_detail(&suite),
            hand.precision,
            hand.recall,
            hand.f1
        ),
    );
}

fn f1(agg: &AggregateResult, planner: &str, attention: &str, view: usize) -> (f64, f64) {
    let r = agg.row(planner, attention, view).unwrap_or_else(|| panic!("no summary row {planner}/{attention}/{view}"));
    (r.f1_mean, r.f1_ci95)
}

fn median_views(agg: &AggregateResult, planner: &str, attention: &str) -> f64 {
    agg.threshold(planner, attention, 0.8).unwrap_or_else(|| panic!("no threshold row {planner}/{attention}")).median_views
}

fn leaf_nodes(gate: &mut Gate, agg: &AggregateResult, trials: usize, elapsed: Duration) {
    let (nbv, _) = f1(agg, "nbv_leaf_nodes", "leaf_nodes", 3);
    let (random, _) = f1(agg, "random", "leaf_nodes", 3);
    let (predefined, _) = f1(agg, "predefined", "leaf_nodes", 3);
    let m_nbv = median_views(agg, "nbv_leaf_nodes", "leaf_nodes");
    let m_random = median_views(agg, "random", "leaf_nodes");
    let m_predefined = median_views(agg, "predefined", "leaf_nodes");
    let ok = trials >= 30
        && nbv - random >= 0.05
        && nbv - predefined >= 0.08
        && m_nbv <= m_random.min(m_predefined) - 1.0
        && elapsed < Duration::from_secs(15 * 60);
    gate.report(
        7,
        "leaf-node attention beats the baselines",
        ok,
        format!(
            "{trials} trials/cell; F1@3 nbv {nbv:.3} vs random {random:.3} (+{:.3}) and predefined {predefined:.3} (+{:.3}); \
             median views to 0.8: nbv {m_nbv} vs random {m_random}, predefined {m_predefined}; study {:.0} s",
            nbv - random,
            nbv - predefined,
            elapsed.as_secs_f64()
        ),
    );
}

fn column_targets(gate: &mut Gate, agg: &AggregateResult) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (planner, target) in [("nbv_whole_plant", "whole_plant"), ("nbv_main_stem", "main_stem")] {
        let own = median_views(agg, planner, target);
        let baseline = median_views(agg, "random", target).min(median_views(agg, "predefined", target));
        ok &= own <= baseline;
        detail.push(format!("{planner} median views to 0.8 on {target} {own} vs best baseline {baseline}"));
    }
    let mut disjoint = Vec::new();
    for target in ["whole_plant", "main_stem"] {
        for view in 1..=10 {
            let (a, ca) = f1(agg, "nbv_whole_plant", target, view);
            let (b, cb) = f1(agg, "nbv_main_stem", target, view);
            if (a - b).abs() > ca + cb {
                disjoint.push(format!("{target}@{view}"));
            }
        }
    }
    ok &= disjoint.is_empty();
    detail.push(if disjoint.is_empty() {
        "whole-plant and main-stem NBV confidence bands overlap at every view on both targets".into()
    } else {
        format!("bands disjoint at {}", disjoint.join(" "))
    });
    gate.report(8, "whole-plant and main-stem attention", ok, detail.join("; "));
}

fn saturation(gate: &mut Gate, agg: &AggregateResult, trials_csv: &Path) {
    let mut best = (String::new(), f64::NEG_INFINITY);
    for planner in agg.planners() {
        let (m, _) = f1(agg, &planner, "whole_plant", 10);
        if m > best.1 {
            best = (planner, m);
        }
    }
    let rows = nbv_core::harness::parse_trials_csv(&std::fs::read_to_string(trials_csv).unwrap()).unwrap();
    let max_trial = rows
        .iter()
        .filter(|r| r.attention == "whole_plant" && r.view == 10)
        .map(|r| r.metrics.f1)
        .fold(f64::NEG_INFINITY, f64::max);
    gate.report(
        10,
        "whole-plant F1 saturates below 1 under the sector constraint",
        best.1 <= 0.98 && max_trial < 1.0,
        format!("best mean F1@10 {:.3} ({}); best single trial {:.3}", best.1, best.0, max_trial),
    );
}

fn sensitivity(gate: &mut Gate, base: &ExperimentConfig, desk: &AggregateResult, root: &Path) {
    let start = Instant::now();
    let mut cfg = base.clone();
    cfg.output_dir = root.to_path_buf();
    cfg.write_traces = false;
    cfg.write_groundtruth = false;
    cfg.attention = vec!["leaf_nodes".into()];

    let (reference, _) = f1(desk, "nbv_leaf_nodes", "leaf_nodes", 5);
    let mut ok = true;
    let mut detail = vec![format!("nbv F1@5 with 27 candidates {reference:.3}")];
    let mut candidates = cfg.clone();
    candidates.planners = vec!["nbv_leaf_nodes".into()];
    candidates.sweeps.samples_per_cell = vec![1, 5];
    for (label, level) in SweepAxis::Candidates.levels(&candidates) {
        let agg = run_experiment(&level).unwrap();
        let (m, _) = f1(&agg, "nbv_leaf_nodes", "leaf_nodes", 5);
        ok &= (m - reference).abs() < 0.05;
        detail.push(format!("{label} {m:.3} (Δ {:+.3})", m - reference));
    }

    let order = |agg: &AggregateResult| {
        let mut ranked: Vec<(String, f64)> =
            ["nbv_leaf_nodes", "random", "predefined"].iter().map(|p| (p.to_string(), f1(agg, p, "leaf_nodes", 3).0)).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked
    };
    let fmt = |ranked: &[(String, f64)]| ranked.iter().map(|(p, m)| format!("{p} {m:.3}")).collect::<Vec<_>>().join(" > ");
    let fine = order(desk);
    let mut resolution = cfg.clone();
    resolution.planners = ["nbv_leaf_nodes", "predefined", "random"].map(String::from).to_vec();
    resolution.sweeps.resolution = vec![0.007];
    for (label, level) in SweepAxis::Resolution.levels(&resolution) {
        let coarse = order(&run_experiment(&level).unwrap());
        let same = fine.iter().map(|r| &r.0).eq(coarse.iter().map(|r| &r.0));
        ok &= same;
        detail.push(format!("F1@3 at 0.003: {} | {label}: {}", fmt(&fine), fmt(&coarse)));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30 * 60);
    detail.push(format!("sweeps {:.0} s", elapsed.as_secs_f64()));
    gate.report(9, "candidate-count and resolution sensitivity", ok, detail.join("; "));
}

fn planning_step(gate: &mut Gate) {
    let cfg = ExperimentConfig::default();
    let scene = PreparedScene::new(&cfg, 0, 0.0).unwrap();
    let v0 = cfg.initial_viewpoint().unwrap();
    let mut map = OccupancyMap::new(cfg.map.clone()).unwrap();
    let cloud = depth_to_cloud(&render_depth(&scene.index, &cfg.camera, &v0), &cfg.camera, &v0);
    map.insert_cloud(&v0.position, &cloud, cfg.camera.max_range).unwrap();
    let roi = RegionOfInterest::none();
    let sector = cfg.sector().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let ((count, gain), elapsed) = pool.install(|| {
        timed(|| {
            let candidates = sample_candidates(&sector, &cfg.sampler);
            let reports = evaluate_candidates(&map, &cfg.camera, &candidates, &roi, &cfg.gain);
            let (_, best) = select_next_view(&candidates, &reports).unwrap();
            (candidates.len(), reports[best].gain)
        })
    });
    gate.report(
        12,
        "one planning step on one worker",
        count == 27 && cfg.gain.ray_cols * cfg.gain.ray_rows == 1200 && elapsed < Duration::from_secs(2),
        format!(
            "{count} candidates × {}×{} rays, range {} m, resolution {} m: {:.3} s (best gain {gain:.0})",
            cfg.gain.ray_cols,
            cfg.gain.ray_rows,
            cfg.gain.raycast_range,
            cfg.map.resolution,
            elapsed.as_secs_f64()
        ),
    );
}

fn main() {
    let mut gate = Gate { failed: Vec::new(), passed: 0 };
    entropy(&mut gate);
    fusion(&mut gate);
    oracles(&mut gate);
    planning_step(&mut gate);

    let root = tempfile::tempdir().unwrap();
    let desk = ExperimentConfig { output_dir: root.path().join("desk"), ..ExperimentConfig::default() };
    let trials = desk.plant_seeds.len() * desk.orientations_deg.len();
    let (first, elapsed) = timed(|| run_experiment(&desk).unwrap());
    assert!(first.failures.is_empty(), "failed trials: {:?}", first.failures);
    leaf_nodes(&mut gate, &first, trials, elapsed);
    column_targets(&mut gate, &first);
    saturation(&mut gate, &first, &desk.output_dir.join("trials.csv"));
    sensitivity(&mut gate, &desk, &first, &root.path().join("sweeps"));

    let repeat = ExperimentConfig { output_dir: root.path().join("desk_repeat"), ..desk.clone() };
    run_experiment(&repeat).unwrap();
    let a = std::fs::read(desk.output_dir.join("summary.csv")).unwrap();
    let b = std::fs::read(repeat.output_dir.join("summary.csv")).unwrap();
    gate.report(11, "repeated desk study gives byte-identical summary.csv", a == b, format!("{} bytes vs {} bytes", a.len(), b.len()));

    let unexpected: Vec<u32> = gate.failed.iter().copied().filter(|id| !KNOWN_SHORTFALLS.contains(id)).collect();
    println!(
        "acceptance: {} of {} criteria pass; known shortfalls failing: {:?}; unexpected failures: {:?}",
        gate.passed,
        gate.passed + gate.failed.len(),
        gate.failed.iter().filter(|id| KNOWN_SHORTFALLS.contains(id)).collect::<Vec<_>>(),
        unexpected
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
