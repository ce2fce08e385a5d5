use std::path::{Path, PathBuf};

use clap::Args;
use epic_core::synth::{self, canned_scene, CannedOptions, SceneSpec, CANNED_SCENES};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, path_value};
use crate::config::{resolve, write_meta, META_FILE};
use crate::CliError;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scene: pan, zoom, two-plane-occlusion or moving-box.
    #[arg(long, conflicts_with = "spec")]
    pub scene: Option<String>,
    /// Scene description JSON (as written to `scene.json`).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub scene: Option<String>,
    pub spec: Option<PathBuf>,
    /// Size, length and seed of canned scenes; unused with `spec`.
    pub canned: CannedOptions,
}

impl SynthArgs {
    pub fn run(self) -> Result<(), CliError> {
        let flags = json!({
            "scene": self.scene,
            "spec": path_value(&self.spec),
            "canned": {
                "width": self.width,
                "height": self.height,
                "frames": self.frames,
                "seed": self.seed,
            },
        });
        let cfg: SynthConfig = resolve(self.config.as_deref(), flags)?;
        execute(&cfg, &self.out)
    }
}

pub fn scene_spec(cfg: &SynthConfig) -> Result<SceneSpec, CliError> {
    match (&cfg.scene, &cfg.spec) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either a scene name or a scene spec, not both".into(),
        )),
        (None, None) => Err(CliError::Usage(format!(
            "missing --scene or --spec; scenes: {}",
            CANNED_SCENES.join(", ")
        ))),
        (Some(name), None) => {
            if !CANNED_SCENES.contains(&name.as_str()) {
                return Err(CliError::Usage(format!(
                    "unknown scene {name:?}; scenes: {}",
                    CANNED_SCENES.join(", ")
                )));
            }
            Ok(canned_scene(name, &cfg.canned)?)
        }
        (None, Some(path)) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
    }
}

pub fn execute(cfg: &SynthConfig, out: &Path) -> Result<(), CliError> {
    let spec = scene_spec(cfg)?;
    let bundle = synth::generate(&spec)?;
    create_dir(out)?;
    synth::write_bundle(out, &spec, &bundle)?;
    write_meta(&out.join(META_FILE), "synth", cfg)
}
