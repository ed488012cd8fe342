//! Incremental voxel walk along a segment (Amanatides–Woo stepping).

use crate::{Point3, Vector3};

use super::VoxelIndex;

/// Iterator over the leaf voxels crossed by the segment `a → b`, in order.
///
/// The first voxel contains `a`, the last contains `b`. Each step moves one
/// coordinate by ±1 towards the end voxel, so the walk takes exactly the
/// Manhattan distance between the two end voxels.
#[derive(Clone, Debug)]
pub struct SegmentWalker {
    current: [i32; 3],
    end: [i32; 3],
    step: [i32; 3],
    /// Segment parameter (0..1) where the walk crosses the next boundary per axis.
    t_max: [f64; 3],
    /// Parameter change per voxel crossed per axis.
    t_delta: [f64; 3],
    done: bool,
}

impl SegmentWalker {
    pub fn new(a: &Point3, b: &Point3, origin: &Point3, resolution: f64) -> Self {
        let ga = (a - origin) / resolution;
        let gb = (b - origin) / resolution;
        let current = [ga.x.floor() as i32, ga.y.floor() as i32, ga.z.floor() as i32];
        let end = [gb.x.floor() as i32, gb.y.floor() as i32, gb.z.floor() as i32];
        let d: Vector3 = gb - ga;
        let mut step = [0; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for axis in 0..3 {
            if current[axis] == end[axis] {
                continue;
            }
            step[axis] = if d[axis] > 0.0 { 1 } else { -1 };
            let boundary = if d[axis] > 0.0 { current[axis] as f64 + 1.0 } else { current[axis] as f64 };
            t_max[axis] = (boundary - ga[axis]) / d[axis];
            t_delta[axis] = 1.0 / d[axis].abs();
        }
        Self { current, end, step, t_max, t_delta, done: false }
    }

    /// Number of voxels remaining, including the current one.
    pub fn remaining(&self) -> usize {
        if self.done {
            return 0;
        }
        (0..3).map(|a| (self.end[a] - self.current[a]).unsigned_abs() as usize).sum::<usize>() + 1
    }
}

impl Iterator for SegmentWalker {
    type Item = VoxelIndex;

    #[inline]
    fn next(&mut self) -> Option<VoxelIndex> {
        if self.done {
            return None;
        }
        let out = VoxelIndex::new(self.current[0], self.current[1], self.current[2]);
        if self.current == self.end {
            self.done = true;
            return Some(out);
        }
        // Axes already at their end coordinate have t_max = inf and never step.
        let mut axis = 0;
        for a in 1..3 {
            if self.t_max[a] < self.t_max[axis] {
                axis = a;
            }
        }
        if self.current[axis] == self.end[axis] {
            // Rounding pushed a finished axis to the front; step the furthest-behind one instead.
            axis = (0..3).find(|&a| self.current[a] != self.end[a]).unwrap();
        }
        self.current[axis] += self.step[axis];
        self.t_max[axis] = if self.current[axis] == self.end[axis] {
            f64::INFINITY
        } else {
            self.t_max[axis] + self.t_delta[axis]
        };
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining();
        (n, Some(n))
    }
}

impl ExactSizeIterator for SegmentWalker {}

/// Ordered voxel list crossed by the segment `a → b`.
pub fn traverse_segment(a: &Point3, b: &Point3, origin: &Point3, resolution: f64) -> Vec<VoxelIndex> {
    SegmentWalker::new(a, b, origin, resolution).collect()
}
