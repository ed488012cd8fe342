//! Point clouds and their PLY serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::Point3;

/// Ordered list of world-frame points (meters).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    /// ASCII PLY with `x y z` as float64.
    pub fn to_ply_string(&self) -> String {
        let mut out = String::with_capacity(64 + self.points.len() * 48);
        out.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(out, "element vertex {}", self.points.len());
        out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
        for p in &self.points {
            let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
        }
        out
    }

    pub fn write_ply(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_ply_string())?;
        Ok(())
    }

    /// Reads the ASCII PLY subset written by [`PointCloud::write_ply`].
    pub fn read_ply(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        Self::parse_ply(&text)
    }

    pub fn parse_ply(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut count = None;
        for (no, line) in lines.by_ref() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("element vertex") {
                count = Some(rest.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: no + 1,
                    message: e.to_string(),
                })?);
            } else if line == "end_header" {
                break;
            } else if line.starts_with("format") && line != "format ascii 1.0" {
                return Err(Error::Parse { line: no + 1, message: "only ascii PLY is supported".into() });
            }
        }
        let count = count.ok_or(Error::Parse { line: 0, message: "missing vertex element".into() })?;
        let mut points = Vec::with_capacity(count);
        for (no, line) in lines.take(count) {
            let xyz: Vec<f64> = line
                .split_whitespace()
                .take(3)
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| Error::Parse { line: no + 1, message: e.to_string() })?;
            if xyz.len() != 3 {
                return Err(Error::Parse { line: no + 1, message: "expected three coordinates".into() });
            }
            points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        }
        if points.len() != count {
            return Err(Error::Parse { line: 0, message: format!("expected {count} vertices, found {}", points.len()) });
        }
        Ok(Self { points })
    }
}

impl From<Vec<Point3>> for PointCloud {
    fn from(points: Vec<Point3>) -> Self {
        Self { points }
    }
}

impl FromIterator<Point3> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point3>>(iter: I) -> Self {
        Self { points: iter.into_iter().collect() }
    }
}
