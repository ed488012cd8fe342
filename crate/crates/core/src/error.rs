use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid plant spec: {0}")]
    InvalidSpec(String),

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("non-finite point at index {0}")]
    NonFinitePoint(usize),

    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("unknown pre-defined pattern {0} (expected 1..=4)")]
    UnknownPattern(u8),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("plant has {0} leaf nodes, at least 3 are required")]
    InsufficientNodes(usize),

    #[error("unknown region of interest `{0}`")]
    UnknownRoi(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nothing to plot: {0}")]
    EmptyAggregate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
