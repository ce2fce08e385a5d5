use std::path::{Path, PathBuf};

use clap::Args;
use epic_core::io;
use epic_core::latent::{
    audit_step, downsample_mask, simulate_denoise_trace, ControlBlockParams, ControlConfig, DenoiseSchedule,
    LatentGrid, LatentMask, MaskMode, StepAudit, TEMPORAL_COMPRESSION,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_dir, par_read, path_value, require};
use crate::config::{resolve, write_meta, META_FILE};
use crate::CliError;

#[derive(Debug, Args)]
pub struct FuseDemoArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Anchor latent grid (`.eplg`).
    #[arg(long)]
    pub anchor_latent: Option<PathBuf>,
    /// Directory of raw `mask_#####.png`, pooled to the latent grid.
    #[arg(long, conflicts_with = "latent_mask")]
    pub masks: Option<PathBuf>,
    /// Latent-resolution mask (`.eplm`), used as is.
    #[arg(long)]
    pub latent_mask: Option<PathBuf>,
    /// Pooling of raw masks: train (average) or inference (max).
    #[arg(long, value_parser = ["train", "inference"])]
    pub mask_mode: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Leading fraction of steps that receive control.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Control block width (default: the largest allowed, at most 256).
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    /// Standard deviation scale of a random output projection; 0 keeps the
    /// zero-initialized projection.
    #[arg(long)]
    pub projection_scale: Option<f32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for the trace and audit.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuseDemoConfig {
    pub anchor_latent: Option<PathBuf>,
    pub masks: Option<PathBuf>,
    pub latent_mask: Option<PathBuf>,
    pub mask_mode: MaskMode,
    pub schedule: DenoiseSchedule,
    pub hidden_dim: Option<usize>,
    pub layers: usize,
    pub patch_size: usize,
    pub mlp_ratio: usize,
    pub projection_scale: f32,
    pub seed: u64,
}

impl Default for FuseDemoConfig {
    fn default() -> Self {
        let control = ControlConfig::default();
        Self {
            anchor_latent: None,
            masks: None,
            latent_mask: None,
            mask_mode: MaskMode::Inference,
            schedule: DenoiseSchedule::default(),
            hidden_dim: None,
            layers: control.n_layers,
            patch_size: control.patch_size,
            mlp_ratio: control.mlp_ratio,
            projection_scale: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuseAudit {
    pub schedule: DenoiseSchedule,
    pub control: ControlConfig,
    pub projection_is_zero: bool,
    pub steps: Vec<StepAudit>,
    /// Total changed positions outside the mask across all steps.
    pub changed_outside_mask: usize,
    /// No step touched a position where the mask is zero.
    pub invisible_unchanged: bool,
}

impl FuseDemoArgs {
    pub fn run(self) -> Result<(), CliError> {
        let flags = json!({
            "anchor_latent": path_value(&self.anchor_latent),
            "masks": path_value(&self.masks),
            "latent_mask": path_value(&self.latent_mask),
            "mask_mode": self.mask_mode,
            "schedule": { "total_steps": self.steps, "fraction": self.fraction },
            "hidden_dim": self.hidden_dim,
            "layers": self.layers,
            "patch_size": self.patch_size,
            "projection_scale": self.projection_scale,
            "seed": self.seed,
        });
        let cfg: FuseDemoConfig = resolve(self.config.as_deref(), flags)?;
        execute(&cfg, &self.out)
    }
}

fn load_mask(cfg: &FuseDemoConfig, z: &LatentGrid) -> Result<LatentMask, CliError> {
    let (lf, _, lh, lw) = z.shape();
    let mask = match (&cfg.masks, &cfg.latent_mask) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --masks or --latent-mask, not both".into())),
        (None, None) => {
            return Err(CliError::Usage(
                "missing --masks or --latent-mask (flag or config)".into(),
            ))
        }
        (None, Some(path)) => io::read_latent_mask(path)?,
        (Some(dir), None) => {
            let n = io::sequence_len(dir, "mask", "png");
            if n == 0 {
                return Err(epic_core::Error::Missing(format!(
                    "{}",
                    io::sequence_path(dir, "mask", 0, "png").display()
                ))
                .into());
            }
            let raw = par_read(0..n, |k| io::read_mask(&io::sequence_path(dir, "mask", k, "png")))?;
            downsample_mask(&raw, (lf, lh, lw), cfg.mask_mode, TEMPORAL_COMPRESSION)?
        }
    };
    if !mask.matches(z) {
        return Err(epic_core::Error::Shape(format!(
            "mask is {}x{}x{}, anchor latent is {lf}x{lh}x{lw}",
            mask.frames(),
            mask.height(),
            mask.width()
        ))
        .into());
    }
    Ok(mask)
}

/// Control block shape for a latent with `channels` channels.
pub fn control_config(cfg: &FuseDemoConfig, channels: usize) -> ControlConfig {
    let widest = channels * cfg.patch_size * cfg.patch_size;
    ControlConfig {
        hidden_dim: cfg.hidden_dim.unwrap_or(widest.min(256)),
        n_layers: cfg.layers,
        patch_size: cfg.patch_size,
        in_channels: 2 * channels,
        backbone_dim: channels,
        mlp_ratio: cfg.mlp_ratio,
    }
}

pub fn execute(cfg: &FuseDemoConfig, out: &Path) -> Result<(), CliError> {
    let z_anchor = io::read_latent_grid(require(&cfg.anchor_latent, "--anchor-latent")?)?;
    let mask = load_mask(cfg, &z_anchor)?;
    let channels = z_anchor.channels();
    let control = control_config(cfg, channels);
    let mut params = ControlBlockParams::init(control, cfg.seed)?;
    if cfg.projection_scale != 0.0 {
        params = params.with_random_projection(cfg.seed, cfg.projection_scale);
    }
    let trace = simulate_denoise_trace(&z_anchor, &mask, Some(&params), channels, cfg.schedule, cfg.seed)?;
    let steps: Vec<StepAudit> = trace.iter().map(|s| audit_step(s, &mask)).collect();
    let changed_outside_mask = steps.iter().map(|s| s.changed_outside_mask).sum();
    let audit = FuseAudit {
        schedule: cfg.schedule,
        control,
        projection_is_zero: params.projection_is_zero(),
        steps,
        changed_outside_mask,
        invisible_unchanged: changed_outside_mask == 0,
    };

    create_dir(out)?;
    trace
        .par_iter()
        .try_for_each(|s| io::write_latent_grid(&out.join(format!("step_{:03}.eplg", s.step)), &s.latent))?;
    io::write_latent_mask(&out.join("mask.eplm"), &mask)?;
    let text = serde_json::to_string_pretty(&audit).expect("audit serializes");
    let audit_path = out.join("audit.json");
    std::fs::write(&audit_path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", audit_path.display())))?;
    write_meta(&out.join(META_FILE), "fuse-demo", cfg)
}
