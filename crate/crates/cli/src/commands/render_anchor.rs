use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use epic_core::flow::AnchorVideo;
use epic_core::geometry::RigidTransform;
use epic_core::io;
use epic_core::render::{
    default_dilation_radius, render_anchor, render_masked_anchor, render_object_motion_anchor, ObjectMotion,
    RenderConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, path_value, require, RenderFlags};
use crate::config::{resolve, write_meta, META_FILE};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    /// Whole point cloud.
    Full,
    /// Points under the (dilated) segmentation are excluded.
    Masked,
    /// Points under the segmentation move with per-frame transforms.
    Object,
}

#[derive(Debug, Args)]
pub struct RenderAnchorArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Source image (PNG).
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Depth for the image: `.pfm` or raw float32.
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// Trajectory JSON; frame 0 is the source view.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Segmentation mask PNG.
    #[arg(long)]
    pub seg: Option<PathBuf>,
    /// JSON `{"transforms": [[12 numbers], ...]}`, one per trajectory frame.
    #[arg(long)]
    pub object_motion: Option<PathBuf>,
    /// Inferred from the inputs when absent.
    #[arg(long, value_enum)]
    pub mode: Option<RenderMode>,
    /// Segmentation dilation radius in pixels (default scales with resolution).
    #[arg(long)]
    pub dilation: Option<u32>,
    #[command(flatten)]
    pub render: RenderFlags,
    /// Output anchor directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderAnchorConfig {
    pub image: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub seg: Option<PathBuf>,
    pub object_motion: Option<PathBuf>,
    pub mode: Option<RenderMode>,
    pub dilation: Option<u32>,
    pub render: RenderConfig,
}

impl RenderAnchorArgs {
    pub fn run(self) -> Result<(), CliError> {
        let flags = json!({
            "image": path_value(&self.image),
            "depth": path_value(&self.depth),
            "trajectory": path_value(&self.trajectory),
            "seg": path_value(&self.seg),
            "object_motion": path_value(&self.object_motion),
            "mode": self.mode,
            "dilation": self.dilation,
            "render": self.render.to_value(),
        });
        let cfg: RenderAnchorConfig = resolve(self.config.as_deref(), flags)?;
        execute(&cfg, &self.out)
    }
}

/// The mode implied by the inputs, checked against an explicit one.
pub fn resolve_mode(cfg: &RenderAnchorConfig) -> Result<RenderMode, CliError> {
    let (seg, motion) = (cfg.seg.is_some(), cfg.object_motion.is_some());
    if motion && !seg {
        return Err(CliError::Usage(
            "--object-motion needs --seg for the object region".into(),
        ));
    }
    let inferred = match (seg, motion) {
        (_, true) => RenderMode::Object,
        (true, false) => RenderMode::Masked,
        (false, false) => RenderMode::Full,
    };
    match cfg.mode {
        Some(m) if m != inferred => Err(CliError::Usage(format!(
            "mode {m:?} conflicts with the given inputs, which select {inferred:?}"
        ))),
        _ => Ok(inferred),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionFile {
    transforms: Vec<RigidTransform>,
}

fn read_transforms(path: &Path) -> Result<Vec<RigidTransform>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let file: MotionFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(file.transforms)
}

pub fn render(cfg: &RenderAnchorConfig) -> Result<AnchorVideo, CliError> {
    let mode = resolve_mode(cfg)?;
    let image = io::read_frame(require(&cfg.image, "--image")?)?;
    let depth = io::read_depth(require(&cfg.depth, "--depth")?)?;
    let traj = io::read_trajectory(require(&cfg.trajectory, "--trajectory")?)?;
    let k = &traj.intrinsics;
    let radius = cfg
        .dilation
        .unwrap_or_else(|| default_dilation_radius(k.width, k.height));
    let anchor = match mode {
        RenderMode::Full => {
            let cloud = epic_core::geometry::unproject(&image, &depth, k, &traj.poses[0])?;
            render_anchor(&cloud, &traj, &cfg.render)?
        }
        RenderMode::Masked => {
            let seg = io::read_mask(require(&cfg.seg, "--seg")?)?;
            render_masked_anchor(&image, &depth, &seg, radius, &traj, &cfg.render)?
        }
        RenderMode::Object => {
            let motion = ObjectMotion {
                region: io::read_mask(require(&cfg.seg, "--seg")?)?,
                per_frame_transform: read_transforms(require(&cfg.object_motion, "--object-motion")?)?,
            };
            render_object_motion_anchor(&image, &depth, &motion, &traj, &cfg.render, Some(radius))?
        }
    };
    Ok(anchor)
}

pub fn execute(cfg: &RenderAnchorConfig, out: &Path) -> Result<(), CliError> {
    let anchor = render(cfg)?;
    create_dir(out)?;
    io::write_anchor(out, &anchor)?;
    write_meta(&out.join(META_FILE), "render-anchor", cfg)
}
