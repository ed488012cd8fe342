//! Axis-aligned boxes and the attention regions built from them.

use serde::{Deserialize, Serialize};

use crate::{Point3, Vector3};

/// Closed axis-aligned box given by center and full side lengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub center: Point3,
    pub size: Vector3,
}

impl Aabb {
    pub fn new(center: Point3, size: Vector3) -> Self {
        Self { center, size }
    }

    pub fn from_corners(min: Point3, max: Point3) -> Self {
        Self { center: nalgebra::center(&min, &max), size: max - min }
    }

    pub fn min(&self) -> Point3 {
        self.center - self.size * 0.5
    }

    pub fn max(&self) -> Point3 {
        self.center + self.size * 0.5
    }

    /// Closed containment: points on a face are inside.
    #[inline]
    pub fn contains(&self, p: &Point3) -> bool {
        let half = self.size * 0.5;
        (p.x - self.center.x).abs() <= half.x
            && (p.y - self.center.y).abs() <= half.y
            && (p.z - self.center.z).abs() <= half.z
    }

    /// `self` lies entirely inside `other`.
    pub fn is_inside(&self, other: &Aabb) -> bool {
        other.contains(&self.min()) && other.contains(&self.max())
    }
}

/// Named attention set: a union of closed boxes. An empty box list means
/// "no attention filter".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub name: String,
    pub boxes: Vec<Aabb>,
}

impl RegionOfInterest {
    pub fn none() -> Self {
        Self { name: "none".into(), boxes: Vec::new() }
    }

    pub fn new(name: impl Into<String>, boxes: Vec<Aabb>) -> Self {
        Self { name: name.into(), boxes }
    }

    pub fn is_unfiltered(&self) -> bool {
        self.boxes.is_empty()
    }

    /// True for every point when the region is unfiltered.
    #[inline]
    pub fn admits(&self, p: &Point3) -> bool {
        self.boxes.is_empty() || self.boxes.iter().any(|b| b.contains(p))
    }

    /// Split into one single-box region per box, named `<name>_<k>`.
    pub fn split(&self) -> Vec<RegionOfInterest> {
        self.boxes
            .iter()
            .enumerate()
            .map(|(k, b)| RegionOfInterest::new(format!("{}_{}", self.name, k), vec![*b]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faces_are_inside() {
        let b = Aabb::new(Point3::new(1.0, 0.0, 1.15), Vector3::new(0.3, 0.3, 0.7));
        assert!(b.contains(&Point3::new(1.15, 0.0, 1.15)));
        assert!(b.contains(&Point3::new(1.0, -0.15, 0.8)));
        assert!(!b.contains(&Point3::new(1.0, 0.0, 1.5000001)));
    }

    #[test]
    fn unfiltered_admits_everything() {
        assert!(RegionOfInterest::none().admits(&Point3::new(1e6, -1e6, 0.0)));
    }
}
