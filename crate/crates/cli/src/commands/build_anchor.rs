use std::path::{Path, PathBuf};

use clap::Args;
use epic_core::flow::{build_masked_anchor, chain_flow_pairs, AnchorParams, AnchorVideo, FlowField, FlowPair};
use epic_core::geometry::RgbFrame;
use epic_core::inject::{inject_artifacts, RaySpec};
use epic_core::io;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, par_read, path_value, require};
use crate::config::{resolve, write_meta, META_FILE};
use crate::CliError;

#[derive(Debug, Args)]
pub struct BuildAnchorArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of `frame_#####.png`.
    #[arg(long)]
    pub video: Option<PathBuf>,
    /// Directory of `fwd_#####.flo` / `bwd_#####.flo` (frame 0 to k and
    /// back) or `next_#####.flo` / `prev_#####.flo` (k to k+1 and back).
    #[arg(long)]
    pub flows: Option<PathBuf>,
    /// Forward-backward consistency tolerance in pixels.
    #[arg(long)]
    pub consistency_tol: Option<f64>,
    /// Visible fraction below which masks freeze.
    #[arg(long)]
    pub min_visible_fraction: Option<f64>,
    /// Draw flying-pixel artifact rays into the anchor.
    #[arg(long)]
    pub inject: bool,
    /// Ray direction angle in radians (sampled when absent).
    #[arg(long)]
    pub ray_angle: Option<f64>,
    /// Number of rays (sampled when absent).
    #[arg(long)]
    pub ray_count: Option<u32>,
    #[arg(long)]
    pub dash_on: Option<u32>,
    #[arg(long)]
    pub dash_off: Option<u32>,
    #[arg(long)]
    pub ray_width: Option<u32>,
    #[arg(long)]
    pub fade_start: Option<f64>,
    #[arg(long)]
    pub fade_end: Option<f64>,
    #[arg(long)]
    pub ray_length: Option<u32>,
    /// Seed for artifact injection.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output anchor directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildAnchorConfig {
    pub video: Option<PathBuf>,
    pub flows: Option<PathBuf>,
    pub anchor: AnchorParams,
    pub inject: bool,
    pub rays: RaySpec,
}

impl BuildAnchorArgs {
    pub fn run(self) -> Result<(), CliError> {
        let flags = json!({
            "video": path_value(&self.video),
            "flows": path_value(&self.flows),
            "anchor": {
                "consistency_tol": self.consistency_tol,
                "min_visible_fraction": self.min_visible_fraction,
            },
            "inject": self.inject.then_some(true),
            "rays": {
                "direction_angle": self.ray_angle,
                "ray_count": self.ray_count,
                "dash_on": self.dash_on,
                "dash_off": self.dash_off,
                "width": self.ray_width,
                "fade_start": self.fade_start,
                "fade_end": self.fade_end,
                "length": self.ray_length,
                "seed": self.seed,
            },
        });
        let cfg: BuildAnchorConfig = resolve(self.config.as_deref(), flags)?;
        execute(&cfg, &self.out)
    }
}

pub fn read_video(dir: &Path) -> Result<Vec<RgbFrame>, CliError> {
    let n = io::sequence_len(dir, "frame", "png");
    if n == 0 {
        return Err(
            epic_core::Error::Missing(format!("{}", io::sequence_path(dir, "frame", 0, "png").display())).into(),
        );
    }
    Ok(par_read(0..n, |k| {
        io::read_frame(&io::sequence_path(dir, "frame", k, "png"))
    })?)
}

fn read_flows(
    dir: &Path,
    prefix: &str,
    range: std::ops::Range<usize>,
    link: impl Fn(usize) -> (usize, usize) + Sync,
) -> epic_core::Result<Vec<FlowField>> {
    par_read(range, |k| {
        let (from, to) = link(k);
        io::read_flo(&io::sequence_path(dir, prefix, k, "flo"), from, to)
    })
}

/// Loads flow pairs for an `n`-frame video, preferring direct 0-to-k flows
/// over chained consecutive ones.
pub fn read_flow_pairs(dir: &Path, n: usize) -> Result<Vec<FlowPair>, CliError> {
    if n < 2 {
        return Ok(Vec::new());
    }
    let direct = io::sequence_path(dir, "fwd", 1, "flo");
    let chained = io::sequence_path(dir, "next", 0, "flo");
    if direct.is_file() {
        let fwd = read_flows(dir, "fwd", 1..n, |k| (0, k))?;
        let bwd = read_flows(dir, "bwd", 1..n, |k| (k, 0))?;
        Ok(fwd.into_iter().zip(bwd).map(|(f, b)| FlowPair::direct(f, b)).collect())
    } else if chained.is_file() {
        let next = read_flows(dir, "next", 0..n - 1, |k| (k, k + 1))?;
        let prev = read_flows(dir, "prev", 0..n - 1, |k| (k + 1, k))?;
        Ok(chain_flow_pairs(&next, &prev)?)
    } else {
        Err(epic_core::Error::Missing(format!(
            "no flows for a {n}-frame video: expected {} or {}",
            direct.display(),
            chained.display()
        ))
        .into())
    }
}

pub fn build(cfg: &BuildAnchorConfig) -> Result<AnchorVideo, CliError> {
    let video_dir = require(&cfg.video, "--video")?;
    let flow_dir = require(&cfg.flows, "--flows")?;
    cfg.rays.validate()?;
    let video = read_video(video_dir)?;
    let flows = read_flow_pairs(flow_dir, video.len())?;
    let anchor = build_masked_anchor(&video, &flows, &cfg.anchor)?;
    if cfg.inject {
        Ok(inject_artifacts(&anchor, &cfg.rays)?)
    } else {
        Ok(anchor)
    }
}

pub fn execute(cfg: &BuildAnchorConfig, out: &Path) -> Result<(), CliError> {
    let anchor = build(cfg)?;
    create_dir(out)?;
    io::write_anchor(out, &anchor)?;
    write_meta(&out.join(META_FILE), "build-anchor", cfg)
}
