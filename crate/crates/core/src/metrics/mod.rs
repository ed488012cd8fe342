//! Reconstruction quality against (trimmed) ground truth.

mod nn;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::roi::RegionOfInterest;

pub use nn::{KdTree, RadiusGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Match distance ρ in meters; equal to the map resolution.
    pub distance_threshold: f64,
    /// F1 thresholds τ_a for views-to-threshold.
    pub accuracy_thresholds: Vec<f64>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { distance_threshold: 0.003, accuracy_thresholds: vec![0.8, 0.9] }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_threshold > 0.0) {
            return Err(Error::InvalidConfig("distance threshold must be positive".into()));
        }
        if self.accuracy_thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::InvalidConfig("accuracy thresholds must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl F1Score {
    pub const ZERO: F1Score = F1Score { precision: 0.0, recall: 0.0, f1: 0.0 };

    /// Harmonic mean, defined as zero when both inputs are zero.
    pub fn from_parts(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { precision, recall, f1 }
    }
}

/// Metrics of one view against one target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewMetrics {
    /// Meters; NaN when the reconstruction inside the target is empty.
    pub chamfer: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ViewMetrics {
    pub fn empty_reconstruction() -> Self {
        Self { chamfer: f64::NAN, precision: 0.0, recall: 0.0, f1: 0.0 }
    }

    /// Arithmetic mean of per-target metrics. Chamfer averages over finite
    /// entries only; it stays NaN when none is finite.
    pub fn mean(items: &[ViewMetrics]) -> Self {
        let n = items.len() as f64;
        let finite: Vec<f64> = items.iter().map(|m| m.chamfer).filter(|c| c.is_finite()).collect();
        Self {
            chamfer: if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 },
            precision: items.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: items.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: items.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

/// Points inside any box of the region (closed boxes). An unfiltered region
/// returns the input unchanged.
pub fn trim_cloud(cloud: &PointCloud, roi: &RegionOfInterest) -> PointCloud {
    if roi.is_unfiltered() {
        return cloud.clone();
    }
    cloud.iter().copied().filter(|p| roi.admits(p)).collect()
}

/// Symmetric sum of mean nearest-neighbour distances.
pub fn chamfer_distance(reconstruction: &PointCloud, truth: &PointCloud) -> Result<f64> {
    if reconstruction.is_empty() || truth.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let to_truth = KdTree::new(&truth.points);
    let to_recon = KdTree::new(&reconstruction.points);
    let a = reconstruction.iter().map(|p| to_truth.nearest_distance(p)).sum::<f64>() / reconstruction.len() as f64;
    let b = truth.iter().map(|p| to_recon.nearest_distance(p)).sum::<f64>() / truth.len() as f64;
    Ok(a + b)
}

/// Precision, recall and F1 with the strict `distance < rho` match rule.
pub fn f1_score(reconstruction: &PointCloud, truth: &PointCloud, rho: f64) -> Result<F1Score> {
    if reconstruction.is_empty() || truth.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let near_truth = RadiusGrid::new(&truth.points, rho);
    let near_recon = RadiusGrid::new(&reconstruction.points, rho);
    let matched_r = reconstruction.iter().filter(|p| near_truth.has_neighbor_within(p)).count();
    let matched_t = truth.iter().filter(|p| near_recon.has_neighbor_within(p)).count();
    Ok(F1Score::from_parts(matched_r as f64 / reconstruction.len() as f64, matched_t as f64 / truth.len() as f64))
}

/// All metrics of a reconstruction against a non-empty target cloud.
pub fn evaluate(reconstruction: &PointCloud, truth: &PointCloud, rho: f64) -> Result<ViewMetrics> {
    if truth.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if reconstruction.is_empty() {
        return Ok(ViewMetrics::empty_reconstruction());
    }
    let s = f1_score(reconstruction, truth, rho)?;
    Ok(ViewMetrics { chamfer: chamfer_distance(reconstruction, truth)?, precision: s.precision, recall: s.recall, f1: s.f1 })
}

/// A ground-truth cloud with its search structures built once, for repeated
/// evaluation of growing reconstructions.
pub struct EvaluationTarget {
    truth: PointCloud,
    rho: f64,
    nearest: KdTree,
    within: RadiusGrid,
}

impl EvaluationTarget {
    pub fn new(truth: PointCloud, rho: f64) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidConfig("distance threshold must be positive".into()));
        }
        let nearest = KdTree::new(&truth.points);
        let within = RadiusGrid::new(&truth.points, rho);
        Ok(Self { truth, rho, nearest, within })
    }

    pub fn truth(&self) -> &PointCloud {
        &self.truth
    }

    /// Same result as [`evaluate`] against the stored truth.
    pub fn evaluate(&self, reconstruction: &PointCloud) -> ViewMetrics {
        if reconstruction.is_empty() {
            return ViewMetrics::empty_reconstruction();
        }
        let to_recon = KdTree::new(&reconstruction.points);
        let near_recon = RadiusGrid::new(&reconstruction.points, self.rho);
        let (nr, nt) = (reconstruction.len() as f64, self.truth.len() as f64);
        let a = reconstruction.iter().map(|p| self.nearest.nearest_distance(p)).sum::<f64>() / nr;
        let b = self.truth.iter().map(|p| to_recon.nearest_distance(p)).sum::<f64>() / nt;
        let matched_r = reconstruction.iter().filter(|p| self.within.has_neighbor_within(p)).count();
        let matched_t = self.truth.iter().filter(|p| near_recon.has_neighbor_within(p)).count();
        let s = F1Score::from_parts(matched_r as f64 / nr, matched_t as f64 / nt);
        ViewMetrics { chamfer: a + b, precision: s.precision, recall: s.recall, f1: s.f1 }
    }
}

/// Smallest 1-based view index whose F1 reaches `tau`.
pub fn views_to_threshold(f1_series: &[f64], tau: f64) -> Option<usize> {
    f1_series.iter().position(|f| *f >= tau).map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roi::Aabb;
    use crate::verify;
    use crate::{Point3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> PointCloud {
        (0..n).map(|_| Point3::new(rng.random::<f64>() * scale, rng.random::<f64>() * scale, rng.random::<f64>() * scale)).collect()
    }

    #[test]
    fn chamfer_reference_cases() {
        let p = PointCloud::new(vec![Point3::origin()]);
        let q = PointCloud::new(vec![Point3::new(0.0, 0.0, 1.0)]);
        assert_eq!(chamfer_distance(&p, &q).unwrap(), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_cloud(&mut rng, 50, 1.0);
        assert_eq!(chamfer_distance(&r, &r).unwrap(), 0.0);
        assert!(matches!(chamfer_distance(&PointCloud::default(), &r), Err(Error::EmptyCloud)));
    }

    #[test]
    fn chamfer_and_f1_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let r = random_cloud(&mut rng, 200, 0.05);
            let t = random_cloud(&mut rng, 200, 0.05);
            let want = verify::brute_force_chamfer(&r, &t);
            assert!((chamfer_distance(&r, &t).unwrap() - want).abs() < 1e-12);
            let s = f1_score(&r, &t, 0.006).unwrap();
            let (p, q, f) = verify::brute_force_f1(&r, &t, 0.006);
            assert_eq!((s.precision, s.recall), (p, q));
            assert!((s.f1 - f).abs() < 1e-12);
        }
    }

    #[test]
    fn f1_hand_construction() {
        // Truth: two clusters far apart. Reconstruction covers only the first.
        let a = [Point3::new(0.0, 0.0, 0.0), Point3::new(0.001, 0.0, 0.0)];
        let b = [Point3::new(1.0, 0.0, 0.0), Point3::new(1.001, 0.0, 0.0)];
        let truth: PointCloud = a.iter().chain(b.iter()).copied().collect();
        let recon: PointCloud = a.iter().copied().collect();
        let s = f1_score(&recon, &truth, 0.003).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 0.5));
        assert_eq!(s.f1, 2.0 / 3.0);
    }

    #[test]
    fn separated_clouds_score_zero() {
        let r = PointCloud::new(vec![Point3::origin()]);
        let t = PointCloud::new(vec![Point3::new(1.0, 1.0, 1.0)]);
        assert_eq!(f1_score(&r, &t, 0.003).unwrap(), F1Score::ZERO);
        assert_eq!(f1_score(&r, &r, 0.003).unwrap(), F1Score { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn boundary_distance_is_unmatched() {
        let r = PointCloud::new(vec![Point3::origin()]);
        let t = PointCloud::new(vec![Point3::new(0.5, 0.0, 0.0)]);
        assert_eq!(f1_score(&r, &t, 0.5).unwrap().f1, 0.0);
    }

    #[test]
    fn trimming() {
        let cloud = PointCloud::new(vec![Point3::new(0.5, 0.0, 0.0), Point3::new(0.51, 0.0, 0.0), Point3::new(0.0, 0.0, 0.0)]);
        assert_eq!(trim_cloud(&cloud, &RegionOfInterest::none()), cloud);
        let roi = RegionOfInterest::new("box", vec![Aabb::new(Point3::origin(), Vector3::repeat(1.0))]);
        let trimmed = trim_cloud(&cloud, &roi);
        assert_eq!(trimmed.points, vec![Point3::new(0.5, 0.0, 0.0), Point3::origin()]);
        assert_eq!(trimmed, verify::brute_force_trim(&cloud, &roi));
    }

    #[test]
    fn views_to_threshold_rules() {
        assert_eq!(views_to_threshold(&[0.5, 0.82, 0.9], 0.8), Some(2));
        assert_eq!(views_to_threshold(&[0.5, 0.82, 0.89], 0.9), None);
        assert_eq!(views_to_threshold(&[0.85, 0.7, 0.92], 0.8), Some(1));
    }

    #[test]
    fn prebuilt_target_matches_free_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = random_cloud(&mut rng, 150, 0.04);
        let t = random_cloud(&mut rng, 180, 0.04);
        let target = EvaluationTarget::new(t.clone(), 0.004).unwrap();
        assert_eq!(target.evaluate(&r), evaluate(&r, &t, 0.004).unwrap());
    }

    #[test]
    fn empty_reconstruction_scores_zero() {
        let t = PointCloud::new(vec![Point3::origin()]);
        let m = evaluate(&PointCloud::default(), &t, 0.003).unwrap();
        assert_eq!(m.f1, 0.0);
        assert!(m.chamfer.is_nan());
    }
}
