//! One module per subcommand. Each exposes its clap arguments, a serde
//! config (the part echoed to `meta.json`) and an `execute` function that
//! takes the resolved config.

pub mod build_anchor;
pub mod eval;
pub mod fuse_demo;
pub mod rank_motion;
pub mod render_anchor;
pub mod render_v2v;
pub mod synth;

use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};

use crate::CliError;

/// Maps `f` over `range` in parallel. On failure the error of the lowest
/// failing index is returned, so messages do not depend on scheduling.
pub(crate) fn par_read<T: Send>(
    range: std::ops::Range<usize>,
    f: impl Fn(usize) -> epic_core::Result<T> + Sync + Send,
) -> epic_core::Result<Vec<T>> {
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

pub(crate) fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing {flag} (flag or config)")))
}

pub(crate) fn path_value(p: &Option<PathBuf>) -> Value {
    p.as_ref().map_or(Value::Null, |p| json!(p))
}

/// Point-cloud rendering flags shared by the render commands.
#[derive(Debug, Clone, Args)]
pub struct RenderFlags {
    /// Splat disc radius in pixels.
    #[arg(long)]
    pub splat_radius: Option<u32>,
    /// Depth-test slack in scene units.
    #[arg(long)]
    pub z_tolerance: Option<f64>,
    /// Background color as R,G,B.
    #[arg(long, value_parser = parse_rgb)]
    pub background: Option<[u8; 3]>,
}

impl RenderFlags {
    pub(crate) fn to_value(&self) -> Value {
        json!({
            "splat_radius": self.splat_radius,
            "z_tolerance": self.z_tolerance,
            "background": self.background,
        })
    }
}

fn parse_rgb(s: &str) -> std::result::Result<[u8; 3], String> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<u8>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    parts
        .try_into()
        .map_err(|p: Vec<u8>| format!("expected R,G,B, got {} values", p.len()))
}
