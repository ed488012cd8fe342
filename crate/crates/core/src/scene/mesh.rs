//! Triangle meshes and Wavefront OBJ input/output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point3, Vector3};

/// Triangles with area at or below this (m²) are rejected.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartLabel {
    Stem,
    Leaf,
    Truss,
}

impl PartLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PartLabel::Stem => "stem",
            PartLabel::Leaf => "leaf",
            PartLabel::Truss => "truss",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        match name {
            "stem" => Some(PartLabel::Stem),
            "leaf" => Some(PartLabel::Leaf),
            "truss" => Some(PartLabel::Truss),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
    /// Optional per-triangle part label.
    pub part_labels: Option<Vec<PartLabel>>,
}

impl TriangleMesh {
    /// Builds a mesh and checks every invariant.
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>, part_labels: Option<Vec<PartLabel>>) -> Result<Self> {
        let mesh = Self { vertices, triangles, part_labels };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.vertices.iter().position(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::DegenerateGeometry(format!("vertex {i} is not finite")));
        }
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(Error::DegenerateGeometry(format!("triangle {t} references a missing vertex")));
            }
            let area = self.triangle_area(t);
            if area.is_nan() || area <= DEGENERATE_AREA {
                return Err(Error::DegenerateGeometry(format!("triangle {t} has area {area:e} m²")));
            }
        }
        if let Some(labels) = &self.part_labels {
            if labels.len() != self.triangles.len() {
                return Err(Error::DegenerateGeometry("part label count differs from triangle count".into()));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Axis-aligned bounds as (min, max); `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Point3, Point3)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }

    /// Applies `p -> rotation * p + translation` to every vertex.
    pub fn transformed(&self, iso: &nalgebra::Isometry3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| iso * v).collect(),
            triangles: self.triangles.clone(),
            part_labels: self.part_labels.clone(),
        }
    }

    pub fn append(&mut self, other: &TriangleMesh) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
        match (&mut self.part_labels, &other.part_labels) {
            (Some(mine), Some(theirs)) => mine.extend_from_slice(theirs),
            (mine @ None, None) => *mine = None,
            _ => self.part_labels = None,
        }
    }

    /// Serialises to OBJ. Part labels become `g <label>` groups.
    pub fn to_obj_string(&self) -> String {
        let mut out = String::with_capacity(self.vertices.len() * 40 + self.triangles.len() * 24);
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        let mut current: Option<PartLabel> = None;
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(labels) = &self.part_labels {
                if current != Some(labels[t]) {
                    current = Some(labels[t]);
                    let _ = writeln!(out, "g {}", labels[t].as_str());
                }
            }
            let _ = writeln!(out, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1);
        }
        out
    }

    pub fn write_obj(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_obj_string())?;
        Ok(())
    }
}

/// Loads a triangulated Wavefront OBJ file (meters).
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    parse_obj(&fs::read_to_string(path)?)
}

/// Parses OBJ `v` and `f` records. Faces must be triangles; `g` names that
/// match a part label are kept as per-triangle labels.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut labels = Vec::new();
    let mut all_labelled = true;
    let mut current: Option<PartLabel> = None;

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut fields = line.split_whitespace();
        let Some(tag) = fields.next() else { continue };
        let err = |message: String| Error::Parse { line: line_no, message };
        match tag {
            "v" => {
                let xyz: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad coordinate `{f}`: {e}"))))
                    .collect::<Result<_>>()?;
                if xyz.len() != 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                let refs: Vec<&str> = fields.collect();
                if refs.len() != 3 {
                    return Err(err(format!("face has {} vertices, only triangles are accepted", refs.len())));
                }
                let mut tri = [0u32; 3];
                for (slot, r) in tri.iter_mut().zip(&refs) {
                    let head = r.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| err(format!("bad vertex reference `{r}`")))?;
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => vertices.len() as i64 + i,
                        _ => return Err(err("vertex index 0 is invalid".into())),
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(err(format!("vertex reference `{r}` out of range")));
                    }
                    *slot = resolved as u32;
                }
                triangles.push(tri);
                match current {
                    Some(l) => labels.push(l),
                    None => all_labelled = false,
                }
            }
            "g" | "o" => current = fields.next().and_then(PartLabel::parse),
            _ => {}
        }
    }

    let part_labels = (all_labelled && !triangles.is_empty()).then_some(labels);
    TriangleMesh::new(vertices, triangles, part_labels)
}

/// Unit normal of a non-degenerate triangle.
pub fn triangle_normal(corners: &[Point3; 3]) -> Vector3 {
    (corners[1] - corners[0]).cross(&(corners[2] - corners[0])).normalize()
}
