//! Plain-text map dump used by oracle tests.
//!
//! ```text
//! # occupancy-map resolution <r> origin <x> <y> <z>
//! i j k log_odds
//! ...
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::Point3;

use super::{OccupancyMap, VoxelIndex};

const HEADER: &str = "# occupancy-map";

pub(super) fn write_dump(map: &OccupancyMap) -> String {
    let voxels = map.stored_voxels();
    let mut out = String::with_capacity(64 + voxels.len() * 32);
    let o = map.origin();
    let _ = writeln!(out, "{HEADER} resolution {} origin {} {} {}", map.resolution(), o.x, o.y, o.z);
    for (v, l) in voxels {
        let _ = writeln!(out, "{} {} {} {}", v.i, v.j, v.k, l);
    }
    out
}

/// Parsed map dump.
#[derive(Clone, Debug, PartialEq)]
pub struct MapDump {
    pub resolution: f64,
    pub origin: Point3,
    pub voxels: Vec<(VoxelIndex, f64)>,
}

pub fn parse_dump(text: &str) -> Result<MapDump> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty dump".into() })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse { line: 1, message: format!("bad header `{header}`") };
    if fields.len() != 8 || fields[0] != "#" || fields[2] != "resolution" || fields[4] != "origin" {
        return Err(bad_header());
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad_header());
    let resolution = num(fields[3])?;
    let origin = Point3::new(num(fields[5])?, num(fields[6])?, num(fields[7])?);
    let mut voxels = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let err = || Error::Parse { line: no + 1, message: format!("bad voxel line `{line}`") };
        if parts.len() != 4 {
            return Err(err());
        }
        let idx = |s: &str| s.parse::<i32>().map_err(|_| err());
        let l = parts[3].parse::<f64>().map_err(|_| err())?;
        voxels.push((VoxelIndex::new(idx(parts[0])?, idx(parts[1])?, idx(parts[2])?), l));
    }
    Ok(MapDump { resolution, origin, voxels })
}
