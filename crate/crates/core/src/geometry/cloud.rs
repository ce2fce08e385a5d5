use nalgebra::Vector3;

use super::{CameraIntrinsics, CameraPose, DepthMap, RgbFrame};
use crate::{Error, Result};

/// Points closer to the camera than this (camera-space z) are clipped.
pub const NEAR_PLANE: f64 = 1e-4;

/// Colored world-space points with per-point exclusion flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vector3<f64>>,
    pub colors: Vec<[u8; 3]>,
    pub excluded: Vec<bool>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vector3<f64>>, colors: Vec<[u8; 3]>, excluded: Vec<bool>) -> Result<Self> {
        if positions.len() != colors.len() || positions.len() != excluded.len() {
            return Err(Error::Shape(format!(
                "point cloud lists differ in length ({}, {}, {})",
                positions.len(),
                colors.len(),
                excluded.len()
            )));
        }
        if positions.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidParameter(
                "point cloud contains non-finite positions".into(),
            ));
        }
        Ok(Self {
            positions,
            colors,
            excluded,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn push(&mut self, position: Vector3<f64>, color: [u8; 3], excluded: bool) {
        self.positions.push(position);
        self.colors.push(color);
        self.excluded.push(excluded);
    }

    /// Number of points that take part in rendering.
    pub fn active_count(&self) -> usize {
        self.excluded.iter().filter(|e| !**e).count()
    }

    /// Copy with every excluded point removed.
    pub fn without_excluded(&self) -> Self {
        let mut out = Self::default();
        for i in 0..self.len() {
            if !self.excluded[i] {
                out.push(self.positions[i], self.colors[i], false);
            }
        }
        out
    }

    /// Appends all points of `other`.
    pub fn extend(&mut self, other: &PointCloud) {
        self.positions.extend_from_slice(&other.positions);
        self.colors.extend_from_slice(&other.colors);
        self.excluded.extend_from_slice(&other.excluded);
    }
}

/// One projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Index of the point in the source cloud.
    pub index: usize,
    /// Continuous image-plane coordinates; pixel `(u, v)` spans `[u, u+1) x [v, v+1)`.
    pub pixel: [f64; 2],
    /// Camera-space z.
    pub depth: f64,
    pub color: [u8; 3],
    pub excluded: bool,
}

impl Projection {
    /// Integer pixel containing the projection.
    pub fn pixel_index(&self) -> (usize, usize) {
        (self.pixel[0].floor() as usize, self.pixel[1].floor() as usize)
    }
}

fn check_dims(image: &RgbFrame, depth: &DepthMap, k: &CameraIntrinsics) -> Result<()> {
    let (iw, ih) = (image.width() as usize, image.height() as usize);
    if iw != depth.width() || ih != depth.height() || iw != k.width || ih != k.height {
        return Err(Error::Shape(format!(
            "image {iw}x{ih}, depth {}x{}, intrinsics {}x{} must agree",
            depth.width(),
            depth.height(),
            k.width,
            k.height
        )));
    }
    Ok(())
}

/// Lifts every valid-depth pixel to a world-space point.
///
/// Pixel `(u, v)` with depth `d` maps to the camera-space point
/// `((u + 0.5 - cx) d / fx, (v + 0.5 - cy) d / fy, d)`, then through the
/// inverse of `pose`. Points come out in row-major pixel order.
pub fn unproject(image: &RgbFrame, depth: &DepthMap, k: &CameraIntrinsics, pose: &CameraPose) -> Result<PointCloud> {
    unproject_indexed(image, depth, k, pose).map(|(cloud, _)| cloud)
}

/// As [`unproject`], also returning the source pixel of every point.
pub fn unproject_indexed(
    image: &RgbFrame,
    depth: &DepthMap,
    k: &CameraIntrinsics,
    pose: &CameraPose,
) -> Result<(PointCloud, Vec<(usize, usize)>)> {
    check_dims(image, depth, k)?;
    let n = depth.valid_count();
    let mut cloud = PointCloud {
        positions: Vec::with_capacity(n),
        colors: Vec::with_capacity(n),
        excluded: Vec::with_capacity(n),
    };
    let mut pixels = Vec::with_capacity(n);
    for v in 0..k.height {
        for u in 0..k.width {
            let Some(d) = depth.get(u, v) else { continue };
            let d = d as f64;
            let cam = Vector3::new(
                (u as f64 + 0.5 - k.cx) * d / k.fx,
                (v as f64 + 0.5 - k.cy) * d / k.fy,
                d,
            );
            cloud.push(
                pose.inverse_transform_point(&cam),
                image.get_pixel(u as u32, v as u32).0,
                false,
            );
            pixels.push((u, v));
        }
    }
    Ok((cloud, pixels))
}

/// Perspective projection of a cloud into a camera.
///
/// Points with camera-space z at or below [`NEAR_PLANE`] or landing outside
/// the frame are dropped; surviving entries keep the cloud order.
pub fn project(cloud: &PointCloud, k: &CameraIntrinsics, pose: &CameraPose) -> Vec<Projection> {
    let (w, h) = (k.width as f64, k.height as f64);
    let mut out = Vec::with_capacity(cloud.len());
    for (index, p) in cloud.positions.iter().enumerate() {
        let c = pose.transform_point(p);
        if c.z <= NEAR_PLANE {
            continue;
        }
        let x = k.fx * c.x / c.z + k.cx;
        let y = k.fy * c.y / c.z + k.cy;
        if !(0.0..w).contains(&x) || !(0.0..h).contains(&y) {
            continue;
        }
        out.push(Projection {
            index,
            pixel: [x, y],
            depth: c.z,
            color: cloud.colors[index],
            excluded: cloud.excluded[index],
        });
    }
    out
}
