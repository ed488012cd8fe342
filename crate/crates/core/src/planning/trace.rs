use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gain::GainReport;
use crate::sensor::Viewpoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateGain {
    pub candidate_index: usize,
    pub gain: f64,
    pub visible_voxels: usize,
    pub roi_voxels: usize,
}

impl CandidateGain {
    pub fn from_report(candidate_index: usize, r: &GainReport) -> Self {
        Self { candidate_index, gain: r.gain, visible_voxels: r.visible_voxel_count, roi_voxels: r.roi_voxel_count }
    }
}

/// One executed view. For NBV views, `candidate_gains` holds the step that
/// selected this view and `chosen_gain` its maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    /// 1-based.
    pub view_index: usize,
    #[serde(skip, default = "placeholder_view")]
    pub viewpoint: Viewpoint,
    pub position: [f64; 3],
    /// `[x, y, z, w]`, world-from-camera.
    pub quaternion: [f64; 4],
    pub chosen_gain: Option<f64>,
    pub chosen_candidate: Option<usize>,
    pub candidate_gains: Vec<CandidateGain>,
}

impl ViewRecord {
    pub fn new(view_index: usize, viewpoint: Viewpoint) -> Self {
        let p = viewpoint.position;
        Self {
            view_index,
            viewpoint,
            position: [p.x, p.y, p.z],
            quaternion: viewpoint.quaternion_xyzw(),
            chosen_gain: None,
            chosen_candidate: None,
            candidate_gains: Vec::new(),
        }
    }

    /// The chosen gain is at least every candidate gain of its step.
    pub fn argmax_certified(&self) -> bool {
        match self.chosen_gain {
            Some(g) => self.candidate_gains.iter().all(|c| c.gain <= g),
            None => self.candidate_gains.is_empty(),
        }
    }
}

fn placeholder_view() -> Viewpoint {
    Viewpoint::new(crate::Point3::origin(), nalgebra::UnitQuaternion::identity())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub planner: String,
    pub rng_seed: u64,
    pub views: Vec<ViewRecord>,
}

impl TrialTrace {
    pub fn viewpoints(&self) -> Vec<Viewpoint> {
        self.views.iter().map(|v| v.viewpoint).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a trace and rebuilds each viewpoint from its stored components.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut trace: TrialTrace = serde_json::from_str(text)?;
        for v in &mut trace.views {
            let [x, y, z] = v.position;
            v.viewpoint = Viewpoint::from_components(crate::Point3::new(x, y, z), v.quaternion)?;
        }
        Ok(trace)
    }

    /// Per-step gain table: `step,candidate_index,gain,visible_voxels,roi_voxels`.
    /// `step` is the index of the view the step selected.
    pub fn gain_table_csv(&self) -> String {
        let mut out = String::from("step,candidate_index,gain,visible_voxels,roi_voxels\n");
        for v in &self.views {
            for c in &v.candidate_gains {
                let _ = writeln!(out, "{},{},{},{},{}", v.view_index, c.candidate_index, c.gain, c.visible_voxels, c.roi_voxels);
            }
        }
        out
    }
}
