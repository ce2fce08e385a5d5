use std::path::{Path, PathBuf};

use clap::Args;
use epic_core::geometry::DepthMap;
use epic_core::io;
use epic_core::render::{render_dynamic_anchor, RenderConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::build_anchor::read_video;
use super::{create_dir, par_read, path_value, require, RenderFlags};
use crate::config::{resolve, write_meta, META_FILE};
use crate::CliError;

#[derive(Debug, Args)]
pub struct RenderV2vArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of `frame_#####.png`.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Directory of `depth_#####.pfm` (or raw `depth_#####.bin`).
    #[arg(long)]
    pub depths: Option<PathBuf>,
    /// Cameras of the source video.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Cameras to re-render along.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[command(flatten)]
    pub render: RenderFlags,
    /// Output anchor directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderV2vConfig {
    pub frames: Option<PathBuf>,
    pub depths: Option<PathBuf>,
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub render: RenderConfig,
}

impl RenderV2vArgs {
    pub fn run(self) -> Result<(), CliError> {
        let flags = json!({
            "frames": path_value(&self.frames),
            "depths": path_value(&self.depths),
            "source": path_value(&self.source),
            "target": path_value(&self.target),
            "render": self.render.to_value(),
        });
        let cfg: RenderV2vConfig = resolve(self.config.as_deref(), flags)?;
        execute(&cfg, &self.out)
    }
}

fn read_depths(dir: &Path) -> Result<Vec<DepthMap>, CliError> {
    let ext = if io::sequence_path(dir, "depth", 0, "pfm").is_file() {
        "pfm"
    } else {
        "bin"
    };
    let n = io::sequence_len(dir, "depth", ext);
    Ok(par_read(0..n, |k| {
        io::read_depth(&io::sequence_path(dir, "depth", k, ext))
    })?)
}

pub fn execute(cfg: &RenderV2vConfig, out: &Path) -> Result<(), CliError> {
    let frames = read_video(require(&cfg.frames, "--frames")?)?;
    let depths = read_depths(require(&cfg.depths, "--depths")?)?;
    let source = io::read_trajectory(require(&cfg.source, "--source")?)?;
    let target = io::read_trajectory(require(&cfg.target, "--target")?)?;
    let anchor = render_dynamic_anchor(&frames, &depths, &source, &target, &cfg.render)?;
    create_dir(out)?;
    io::write_anchor(out, &anchor)?;
    write_meta(&out.join(META_FILE), "render-v2v", cfg)
}
