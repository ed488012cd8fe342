use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{views_to_threshold, ViewMetrics};

use super::config::PlannerChoice;

pub const TRIALS_HEADER: &str = "planner,plant_seed,orientation_deg,attention,view,chamfer_m,precision,recall,f1";
pub const SUMMARY_HEADER: &str =
    "planner,attention,view,trials,f1_mean,f1_ci95,chamfer_mean_m,chamfer_ci95_m,precision_mean,recall_mean";
pub const THRESHOLDS_HEADER: &str = "planner,attention,tau,trials,reached,median_views";

/// One metric row of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub planner: String,
    pub plant_seed: u64,
    pub orientation_deg: f64,
    pub attention: String,
    pub view: usize,
    pub metrics: ViewMetrics,
}

impl TrialRow {
    pub fn to_csv_line(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.planner, self.plant_seed, self.orientation_deg, self.attention, self.view, m.chamfer, m.precision, m.recall, m.f1
        )
    }
}

pub fn trials_to_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

fn field<T: std::str::FromStr>(line: usize, name: &str, text: &str) -> Result<T> {
    text.parse().map_err(|_| Error::Parse { line, message: format!("bad {name} '{text}'") })
}

pub fn parse_trials_csv(text: &str) -> Result<Vec<TrialRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRIALS_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "missing trials header".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse { line: n, message: format!("expected 9 fields, found {}", f.len()) });
        }
        rows.push(TrialRow {
            planner: f[0].into(),
            plant_seed: field(n, "plant_seed", f[1])?,
            orientation_deg: field(n, "orientation", f[2])?,
            attention: f[3].into(),
            view: field(n, "view", f[4])?,
            metrics: ViewMetrics {
                chamfer: field(n, "chamfer", f[5])?,
                precision: field(n, "precision", f[6])?,
                recall: field(n, "recall", f[7])?,
                f1: field(n, "f1", f[8])?,
            },
        });
    }
    Ok(rows)
}

/// Mean and 95% half-width (1.96 · sample std / √n) of the finite values.
/// NaN when there are none; zero half-width for a single value.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = finite.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = finite.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

/// Median with the upper-middle convention averaged: mean of the two middle
/// values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub planner: String,
    pub attention: String,
    pub view: usize,
    pub trials: usize,
    pub f1_mean: f64,
    pub f1_ci95: f64,
    pub chamfer_mean: f64,
    pub chamfer_ci95: f64,
    pub precision_mean: f64,
    pub recall_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub planner: String,
    pub attention: String,
    pub tau: f64,
    pub trials: usize,
    pub reached: usize,
    /// Trials that never reach `tau` count as `max_views + 1`.
    pub median_views: f64,
}

/// A failed trial, kept so it is never silently dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub planner: String,
    pub plant_seed: u64,
    pub orientation_deg: f64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub summary: Vec<SummaryRow>,
    pub thresholds: Vec<ThresholdRow>,
    pub failures: Vec<TrialFailure>,
}

type TrialKey = (String, u64, u64, String);

impl AggregateResult {
    /// Groups rows by planner family, attention and view. Trials are
    /// identified by (planner, plant seed, orientation, attention).
    pub fn from_trials(rows: &[TrialRow], taus: &[f64], max_views: usize) -> Self {
        let mut groups: BTreeMap<(String, String, usize), Vec<&ViewMetrics>> = BTreeMap::new();
        let mut series: BTreeMap<TrialKey, Vec<(usize, f64)>> = BTreeMap::new();
        for r in rows {
            let family = PlannerChoice::family(&r.planner).to_string();
            groups.entry((family, r.attention.clone(), r.view)).or_default().push(&r.metrics);
            series
                .entry((r.planner.clone(), r.plant_seed, r.orientation_deg.to_bits(), r.attention.clone()))
                .or_default()
                .push((r.view, r.metrics.f1));
        }
        let summary = groups
            .into_iter()
            .map(|((planner, attention, view), ms)| {
                let f1: Vec<f64> = ms.iter().map(|m| m.f1).collect();
                let ch: Vec<f64> = ms.iter().map(|m| m.chamfer).collect();
                let (f1_mean, f1_ci95) = mean_ci(&f1);
                let (chamfer_mean, chamfer_ci95) = mean_ci(&ch);
                let n = ms.len() as f64;
                SummaryRow {
                    planner,
                    attention,
                    view,
                    trials: ms.len(),
                    f1_mean,
                    f1_ci95,
                    chamfer_mean,
                    chamfer_ci95,
                    precision_mean: ms.iter().map(|m| m.precision).sum::<f64>() / n,
                    recall_mean: ms.iter().map(|m| m.recall).sum::<f64>() / n,
                }
            })
            .collect();
        let mut reach: BTreeMap<(String, String, u64), Vec<Option<usize>>> = BTreeMap::new();
        for ((planner, _, _, attention), mut s) in series {
            s.sort_by_key(|(v, _)| *v);
            let f1: Vec<f64> = s.into_iter().map(|(_, f)| f).collect();
            for &tau in taus {
                reach
                    .entry((PlannerChoice::family(&planner).to_string(), attention.clone(), tau.to_bits()))
                    .or_default()
                    .push(views_to_threshold(&f1, tau));
            }
        }
        let thresholds = reach
            .into_iter()
            .map(|((planner, attention, tau), hits)| {
                let views: Vec<f64> = hits.iter().map(|h| h.map_or(max_views + 1, |v| v) as f64).collect();
                ThresholdRow {
                    planner,
                    attention,
                    tau: f64::from_bits(tau),
                    trials: hits.len(),
                    reached: hits.iter().filter(|h| h.is_some()).count(),
                    median_views: median(&views),
                }
            })
            .collect();
        Self { summary, thresholds, failures: Vec::new() }
    }

    pub fn row(&self, planner: &str, attention: &str, view: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.planner == planner && r.attention == attention && r.view == view)
    }

    pub fn threshold(&self, planner: &str, attention: &str, tau: f64) -> Option<&ThresholdRow> {
        self.thresholds.iter().find(|r| r.planner == planner && r.attention == attention && r.tau == tau)
    }

    pub fn planners(&self) -> Vec<String> {
        let mut p: Vec<String> = self.summary.iter().map(|r| r.planner.clone()).collect();
        p.sort();
        p.dedup();
        p
    }

    pub fn attentions(&self) -> Vec<String> {
        let mut a: Vec<String> = self.summary.iter().map(|r| r.attention.clone()).collect();
        a.sort();
        a.dedup();
        a
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.planner,
                r.attention,
                r.view,
                r.trials,
                r.f1_mean,
                r.f1_ci95,
                r.chamfer_mean,
                r.chamfer_ci95,
                r.precision_mean,
                r.recall_mean
            );
        }
        out
    }

    pub fn thresholds_csv(&self) -> String {
        let mut out = String::from(THRESHOLDS_HEADER);
        out.push('\n');
        for r in &self.thresholds {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.planner, r.attention, r.tau, r.trials, r.reached, r.median_views);
        }
        out
    }

    pub fn failures_csv(&self) -> String {
        let mut out = String::from("planner,plant_seed,orientation_deg,message\n");
        for f in &self.failures {
            let _ = writeln!(out, "{},{},{},\"{}\"", f.planner, f.plant_seed, f.orientation_deg, f.message.replace('"', "'"));
        }
        out
    }

    /// Reads the summary table back; thresholds and failures stay empty.
    pub fn parse_summary_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == SUMMARY_HEADER => {}
            _ => return Err(Error::Parse { line: 1, message: "missing summary header".into() }),
        }
        let mut summary = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let n = i + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Parse { line: n, message: format!("expected 10 fields, found {}", f.len()) });
            }
            summary.push(SummaryRow {
                planner: f[0].into(),
                attention: f[1].into(),
                view: field(n, "view", f[2])?,
                trials: field(n, "trials", f[3])?,
                f1_mean: field(n, "f1_mean", f[4])?,
                f1_ci95: field(n, "f1_ci95", f[5])?,
                chamfer_mean: field(n, "chamfer_mean", f[6])?,
                chamfer_ci95: field(n, "chamfer_ci95", f[7])?,
                precision_mean: field(n, "precision_mean", f[8])?,
                recall_mean: field(n, "recall_mean", f[9])?,
            });
        }
        Ok(Self { summary, ..Self::default() })
    }

    pub fn read_summary(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::parse_summary_csv(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(planner: &str, seed: u64, view: usize, f1: f64) -> TrialRow {
        TrialRow {
            planner: planner.into(),
            plant_seed: seed,
            orientation_deg: 0.0,
            attention: "whole_plant".into(),
            view,
            metrics: ViewMetrics { chamfer: 0.01, precision: f1, recall: f1, f1 },
        }
    }

    #[test]
    fn ci_of_known_sample() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((h - 1.96 * sd / 2.0).abs() < 1e-15);
        assert_eq!(mean_ci(&[f64::NAN, 2.0]), (2.0, 0.0));
        assert!(mean_ci(&[f64::NAN]).0.is_nan());
    }

    #[test]
    fn patterns_pool_into_family() {
        let rows = vec![row("predefined-1", 0, 1, 0.5), row("predefined-2", 0, 1, 0.7), row("random", 0, 1, 0.4)];
        let agg = AggregateResult::from_trials(&rows, &[0.8], 1);
        let p = agg.row("predefined", "whole_plant", 1).unwrap();
        assert_eq!(p.trials, 2);
        assert!((p.f1_mean - 0.6).abs() < 1e-15);
        assert_eq!(agg.planners(), vec!["predefined".to_string(), "random".to_string()]);
    }

    #[test]
    fn thresholds_use_budget_plus_one_when_unreached() {
        let rows = vec![row("random", 0, 1, 0.5), row("random", 0, 2, 0.85), row("random", 1, 1, 0.5), row("random", 1, 2, 0.6)];
        let agg = AggregateResult::from_trials(&rows, &[0.8], 2);
        let t = agg.threshold("random", "whole_plant", 0.8).unwrap();
        assert_eq!((t.trials, t.reached), (2, 1));
        assert_eq!(t.median_views, 2.5);
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![row("random", 3, 1, 0.123456789012345), row("nbv_main_stem", 4, 2, 1.0 / 3.0)];
        assert_eq!(parse_trials_csv(&trials_to_csv(&rows)).unwrap(), rows);
        let agg = AggregateResult::from_trials(&rows, &[0.8], 2);
        let back = AggregateResult::parse_summary_csv(&agg.summary_csv()).unwrap();
        assert_eq!(back.summary, agg.summary);
    }
}
