use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_bytes, write_bytes};
use crate::geometry::{CameraIntrinsics, CameraPose, Trajectory};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    frames: Vec<FrameEntry>,
}

#[derive(Serialize, Deserialize)]
struct FrameEntry {
    /// Row-major 3x4 world-to-camera matrix.
    w2c: Vec<f64>,
}

/// Parses trajectory JSON. Rotations within the upstream tolerance of
/// orthonormal are snapped; anything further off is rejected.
pub fn parse_trajectory(text: &str) -> std::result::Result<Trajectory, String> {
    let file: TrajectoryFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if file.frames.is_empty() {
        let line = text.lines().position(|l| l.contains("\"frames\"")).map_or(1, |i| i + 1);
        return Err(format!("trajectory has no frames at line {line}"));
    }
    let k = CameraIntrinsics::new(file.fx, file.fy, file.cx, file.cy, file.width, file.height)
        .map_err(|e| e.to_string())?;
    let poses = file
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let m: [f64; 12] = f
                .w2c
                .as_slice()
                .try_into()
                .map_err(|_| format!("frame {i}: w2c has {} numbers, expected 12", f.w2c.len()))?;
            CameraPose::from_row_major_projected(&m).map_err(|e| format!("frame {i}: {e}"))
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    Trajectory::new(k, poses).map_err(|e| e.to_string())
}

pub fn trajectory_to_json(traj: &Trajectory) -> String {
    let k = traj.intrinsics;
    let file = TrajectoryFile {
        fx: k.fx,
        fy: k.fy,
        cx: k.cx,
        cy: k.cy,
        width: k.width,
        height: k.height,
        frames: traj
            .poses
            .iter()
            .map(|p| FrameEntry {
                w2c: p.to_row_major().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("trajectory serializes")
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::format(path, e.to_string()))?;
    parse_trajectory(&text).map_err(|m| Error::format(path, m))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_bytes(path, trajectory_to_json(traj).as_bytes())
}
