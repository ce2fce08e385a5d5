//! Point-cloud anchor rendering.
//!
//! Points are splatted front to back with a per-pixel z-buffer. Processing
//! order is the cloud order (row-major source pixels for unprojected
//! clouds), and a point only replaces a pixel when it is nearer by more than
//! `z_tolerance`, so equal-depth ties always keep the earlier point and the
//! output is independent of scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flow::{AnchorMetadata, AnchorVideo, VisibilityMask};
use crate::geometry::{
    dilate, disc_offsets, project, unproject_indexed, BinaryMask, CameraIntrinsics, CameraPose, DepthMap, PointCloud,
    RgbFrame, RigidTransform, Trajectory,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Disc radius in pixels; 0 splats to the containing pixel only.
    pub splat_radius: u32,
    /// Depth-test slack in scene units.
    pub z_tolerance: f64,
    pub background: [u8; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            splat_radius: 0,
            z_tolerance: 1e-3,
            background: [0, 0, 0],
        }
    }
}

impl RenderConfig {
    fn validate(&self) -> Result<()> {
        if !(self.z_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "z_tolerance must be positive, got {}",
                self.z_tolerance
            )));
        }
        Ok(())
    }
}

/// Mask dilation used for masked and object-motion rendering when none is
/// given: 5 px at 480x720, scaled with resolution.
pub fn default_dilation_radius(width: usize, height: usize) -> u32 {
    let s = (height as f64 / 480.0).min(width as f64 / 720.0);
    (5.0 * s).round() as u32
}

/// Renders one view. Returns the frame and its coverage mask.
pub fn render_frame(
    cloud: &PointCloud,
    k: &CameraIntrinsics,
    pose: &CameraPose,
    config: &RenderConfig,
) -> (RgbFrame, BinaryMask) {
    let (w, h) = (k.width, k.height);
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut color = vec![config.background; w * h];
    let offsets = disc_offsets(config.splat_radius);
    for p in project(cloud, k, pose) {
        if p.excluded {
            continue;
        }
        let (u, v) = p.pixel_index();
        for &(dx, dy) in &offsets {
            let (x, y) = (u as i64 + dx, v as i64 + dy);
            if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                continue;
            }
            let i = y as usize * w + x as usize;
            if zbuf[i].is_infinite() || p.depth < zbuf[i] - config.z_tolerance {
                zbuf[i] = p.depth;
                color[i] = p.color;
            }
        }
    }
    let frame = RgbFrame::from_fn(w as u32, h as u32, |x, y| {
        image::Rgb(color[y as usize * w + x as usize])
    });
    let mask = BinaryMask::new(w, h, zbuf.iter().map(|z| z.is_finite()).collect()).expect("sized buffer");
    (frame, mask)
}

fn render_views<'a>(
    views: impl IndexedParallelIterator<Item = (usize, &'a PointCloud, &'a CameraPose)>,
    k: &CameraIntrinsics,
    config: &RenderConfig,
) -> (Vec<RgbFrame>, Vec<VisibilityMask>) {
    views
        .map(|(i, cloud, pose)| {
            let (frame, mask) = render_frame(cloud, k, pose, config);
            (
                frame,
                VisibilityMask {
                    mask,
                    frame_index: i,
                    frozen: false,
                },
            )
        })
        .unzip()
}

/// Renders a static cloud along a trajectory, one frame per pose.
pub fn render_anchor(cloud: &PointCloud, trajectory: &Trajectory, config: &RenderConfig) -> Result<AnchorVideo> {
    config.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let views = trajectory.poses.par_iter().enumerate().map(|(i, p)| (i, cloud, p));
    let (frames, masks) = render_views(views, &trajectory.intrinsics, config);
    Ok(AnchorVideo {
        frames,
        masks,
        metadata: AnchorMetadata::new("render", serde_json::to_value(config).expect("config serializes")),
    })
}

/// Unprojects `image` through the first pose of `trajectory`, excludes
/// every point whose source pixel lies in `dilate(seg, dilation_radius)`,
/// and renders the rest.
pub fn render_masked_anchor(
    image: &RgbFrame,
    depth: &DepthMap,
    seg: &BinaryMask,
    dilation_radius: u32,
    trajectory: &Trajectory,
    config: &RenderConfig,
) -> Result<AnchorVideo> {
    if (seg.width() as u32, seg.height() as u32) != image.dimensions() {
        return Err(Error::Shape(format!(
            "segmentation {}x{} does not match image {}x{}",
            seg.width(),
            seg.height(),
            image.width(),
            image.height()
        )));
    }
    let (mut cloud, pixels) = unproject_indexed(image, depth, &trajectory.intrinsics, &trajectory.poses[0])?;
    let grown = dilate(seg, dilation_radius);
    for (flag, &(u, v)) in cloud.excluded.iter_mut().zip(&pixels) {
        *flag = grown.get(u, v);
    }
    if cloud.active_count() == 0 {
        return Err(Error::EmptyCloud);
    }
    let mut out = render_anchor(&cloud, trajectory, config)?;
    out.metadata = AnchorMetadata::new(
        "render-masked",
        serde_json::json!({ "render": config, "dilation_radius": dilation_radius }),
    );
    Ok(out)
}

/// Video-to-video retargeting: frame `i` is unprojected through source pose
/// `i` and rendered through target pose `i`. Clouds are never merged across
/// frames.
pub fn render_dynamic_anchor(
    frames: &[RgbFrame],
    depths: &[DepthMap],
    source: &Trajectory,
    target: &Trajectory,
    config: &RenderConfig,
) -> Result<AnchorVideo> {
    config.validate()?;
    let n = frames.len();
    if depths.len() != n || source.len() != n || target.len() != n {
        return Err(Error::Shape(format!(
            "lengths differ: {n} frames, {} depths, {} source poses, {} target poses",
            depths.len(),
            source.len(),
            target.len()
        )));
    }
    let clouds: Vec<PointCloud> = (0..n)
        .into_par_iter()
        .map(|i| unproject_indexed(&frames[i], &depths[i], &source.intrinsics, &source.poses[i]).map(|(c, _)| c))
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let views = (0..n).into_par_iter().map(|i| (i, &clouds[i], &target.poses[i]));
    let (frames, masks) = render_views(views, &target.intrinsics, config);
    Ok(AnchorVideo {
        frames,
        masks,
        metadata: AnchorMetadata::new(
            "render-dynamic",
            serde_json::to_value(config).expect("config serializes"),
        ),
    })
}

/// Rigid motion of a segmented object over the output frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMotion {
    /// First-frame object segmentation.
    pub region: BinaryMask,
    /// World-space transform per output frame; the first must be identity.
    pub per_frame_transform: Vec<RigidTransform>,
}

/// Moves the object's points by their per-frame transform while the
/// background stays fixed, then renders the union along `trajectory`.
pub fn render_object_motion_anchor(
    image: &RgbFrame,
    depth: &DepthMap,
    motion: &ObjectMotion,
    trajectory: &Trajectory,
    config: &RenderConfig,
    dilation_radius: Option<u32>,
) -> Result<AnchorVideo> {
    config.validate()?;
    if motion.per_frame_transform.len() != trajectory.len() {
        return Err(Error::Shape(format!(
            "{} object transforms for {} trajectory frames",
            motion.per_frame_transform.len(),
            trajectory.len()
        )));
    }
    if !motion.per_frame_transform[0].is_identity(1e-12) {
        return Err(Error::InvalidParameter(
            "first object transform must be the identity".into(),
        ));
    }
    if motion.region.is_empty() {
        return Err(Error::InvalidParameter("object region is empty".into()));
    }
    if (motion.region.width() as u32, motion.region.height() as u32) != image.dimensions() {
        return Err(Error::Shape("object region does not match image size".into()));
    }
    let k = &trajectory.intrinsics;
    let radius = dilation_radius.unwrap_or_else(|| default_dilation_radius(k.width, k.height));
    let (cloud, pixels) = unproject_indexed(image, depth, k, &trajectory.poses[0])?;
    let grown = dilate(&motion.region, radius);
    let mut background = PointCloud::default();
    let mut object = PointCloud::default();
    for (i, &(u, v)) in pixels.iter().enumerate() {
        let target = if grown.get(u, v) { &mut object } else { &mut background };
        target.push(cloud.positions[i], cloud.colors[i], false);
    }
    if object.is_empty() && background.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let per_frame: Vec<PointCloud> = motion
        .per_frame_transform
        .par_iter()
        .map(|t| {
            // Background first so the processing order matches the source
            // layout for unmoved content.
            let mut c = background.clone();
            let moved = PointCloud {
                positions: object.positions.iter().map(|p| t.transform_point(p)).collect(),
                colors: object.colors.clone(),
                excluded: object.excluded.clone(),
            };
            c.extend(&moved);
            c
        })
        .collect();
    let views = trajectory
        .poses
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, &per_frame[i], p));
    let (frames, masks) = render_views(views, k, config);
    Ok(AnchorVideo {
        frames,
        masks,
        metadata: AnchorMetadata::new(
            "render-object",
            serde_json::json!({ "render": config, "dilation_radius": radius }),
        ),
    })
}
