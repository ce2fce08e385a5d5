use std::path::{Path, PathBuf};

use clap::Args;
use epic_core::io::read_trajectory;
use epic_core::metrics::{
    evaluate, seed_statistics, MetricReport, MetricTriple, PoseConvention, StdKind, TrajectoryPair,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{path_value, require};
use crate::config::{resolve, sibling_meta_path, write_meta};
use crate::CliError;

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Predicted trajectory file, or a directory of them.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Ground-truth trajectory file, or a directory of them.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Seeds per instance; predictions are then `<name>_seed<i>.json`.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, value_parser = ["w2c", "c2w"])]
    pub convention: Option<String>,
    #[arg(long, value_parser = ["population", "sample"])]
    pub std: Option<String>,
    /// Report JSON; the resolved config goes to `<stem>.meta.json` beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub seeds: Option<usize>,
    pub convention: PoseConvention,
    pub std: StdKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: String,
    pub mean: MetricTriple,
    pub std: MetricTriple,
    pub per_seed: Vec<MetricTriple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Mean over instances of the per-instance means.
    pub mean: MetricTriple,
    /// Mean over instances of the per-instance seed standard deviations.
    pub std: MetricTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub convention: PoseConvention,
    pub std_kind: StdKind,
    pub seeds: usize,
    pub instances: Vec<InstanceReport>,
    pub aggregate: Aggregate,
}

impl EvalArgs {
    pub fn run(self) -> Result<(), CliError> {
        let flags = json!({
            "pred": path_value(&self.pred),
            "gt": path_value(&self.gt),
            "seeds": self.seeds,
            "convention": self.convention,
            "std": self.std,
        });
        let cfg: EvalConfig = resolve(self.config.as_deref(), flags)?;
        execute(&cfg, &self.out)
    }
}

/// `(instance name, ground truth, predictions)` triples.
fn instances(cfg: &EvalConfig) -> Result<Vec<(String, PathBuf, Vec<PathBuf>)>, CliError> {
    let pred = require(&cfg.pred, "--pred")?;
    let gt = require(&cfg.gt, "--gt")?;
    if cfg.seeds == Some(0) {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let gts: Vec<PathBuf> = if gt.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(gt)
            .map_err(|e| CliError::Input(format!("{}: {e}", gt.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension().is_some_and(|e| e == "json")
                    && !p.to_string_lossy().ends_with(".meta.json")
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(epic_core::Error::Missing(format!("no trajectory files in {}", gt.display())).into());
        }
        files
    } else {
        vec![gt.to_path_buf()]
    };
    let single = !gt.is_dir() && !pred.is_dir();
    if single && cfg.seeds.is_some_and(|k| k > 1) {
        return Err(CliError::Usage("several seeds need --pred to be a directory".into()));
    }
    if !single && !pred.is_dir() {
        return Err(CliError::Usage(
            "a ground-truth directory needs --pred to be a directory".into(),
        ));
    }
    Ok(gts
        .into_iter()
        .map(|g| {
            let name = g
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let preds = match (single, cfg.seeds) {
                (true, _) => vec![pred.to_path_buf()],
                (false, None) => vec![pred.join(format!("{name}.json"))],
                (false, Some(k)) => (0..k).map(|i| pred.join(format!("{name}_seed{i}.json"))).collect(),
            };
            (name, g, preds)
        })
        .collect())
}

fn mean_of(ts: &[MetricTriple]) -> MetricTriple {
    let n = ts.len() as f64;
    MetricTriple {
        rot_err: ts.iter().map(|t| t.rot_err).sum::<f64>() / n,
        trans_err: ts.iter().map(|t| t.trans_err).sum::<f64>() / n,
        cammc: ts.iter().map(|t| t.cammc).sum::<f64>() / n,
    }
}

pub fn report(cfg: &EvalConfig) -> Result<EvalReport, CliError> {
    let mut out = Vec::new();
    for (name, gt_path, preds) in instances(cfg)? {
        let gt = read_trajectory(&gt_path)?;
        let per_seed = preds
            .iter()
            .map(|p| -> Result<MetricReport, CliError> {
                let pair = TrajectoryPair::new(read_trajectory(p)?, gt.clone())?;
                Ok(evaluate(&pair, cfg.convention))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let stats = seed_statistics(&per_seed, cfg.std)?;
        out.push(InstanceReport {
            name,
            mean: stats.mean.expect("statistics carry a mean"),
            std: stats.std.expect("statistics carry a std"),
            per_seed: stats.per_seed.expect("statistics carry per-seed values"),
        });
    }
    let aggregate = Aggregate {
        mean: mean_of(&out.iter().map(|i| i.mean).collect::<Vec<_>>()),
        std: mean_of(&out.iter().map(|i| i.std).collect::<Vec<_>>()),
    };
    Ok(EvalReport {
        convention: cfg.convention,
        std_kind: cfg.std,
        seeds: cfg.seeds.unwrap_or(1),
        instances: out,
        aggregate,
    })
}

pub fn execute(cfg: &EvalConfig, out: &Path) -> Result<(), CliError> {
    let report = report(cfg)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        super::create_dir(parent)?;
    }
    std::fs::write(out, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    write_meta(&sibling_meta_path(out), "eval", cfg)
}
