use serde::{Deserialize, Serialize};

use super::CameraPose;
use crate::{Error, Result};

/// Pinhole intrinsics in pixels.
///
/// Pixel `(u, v)` covers the square `[u, u+1) x [v, v+1)` of the image plane;
/// its center sits at `(u + 0.5, v + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("image size must be non-zero".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::InvalidParameter(format!(
                "principal point ({}, {}) outside {}x{} frame",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Same camera at a different resolution, principal point and focal
    /// lengths scaled proportionally.
    pub fn scaled(&self, width: usize, height: usize) -> Result<Self> {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self::new(self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy, width, height)
    }
}

/// Intrinsics plus one world-to-camera pose per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub intrinsics: CameraIntrinsics,
    pub poses: Vec<CameraPose>,
}

impl Trajectory {
    pub fn new(intrinsics: CameraIntrinsics, poses: Vec<CameraPose>) -> Result<Self> {
        intrinsics.validate()?;
        if poses.is_empty() {
            return Err(Error::InvalidParameter("trajectory has no poses".into()));
        }
        Ok(Self { intrinsics, poses })
    }

    /// `n` copies of a single pose.
    pub fn constant(intrinsics: CameraIntrinsics, pose: CameraPose, n: usize) -> Result<Self> {
        Self::new(intrinsics, vec![pose; n])
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Every pose replaced by its camera-to-world counterpart.
    pub fn to_camera_to_world(&self) -> Self {
        Self {
            intrinsics: self.intrinsics,
            poses: self.poses.iter().map(CameraPose::inverse).collect(),
        }
    }

    /// Translations multiplied by `factor`, rotations untouched.
    pub fn scale_translations(&self, factor: f64) -> Self {
        Self {
            intrinsics: self.intrinsics,
            poses: self
                .poses
                .iter()
                .map(|p| CameraPose::from_parts_unchecked(p.rotation, p.translation * factor))
                .collect(),
        }
    }
}
