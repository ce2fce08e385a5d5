use std::path::{Path, PathBuf};

use clap::Args;
use epic_core::flow::{flow_motion_score, FlowField};
use epic_core::io;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{resolve, sibling_meta_path, write_meta};
use crate::CliError;

#[derive(Debug, Args)]
pub struct RankMotionArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Flow directories: `next_#####.flo` runs, or `fwd_#####.flo` from 1.
    pub dirs: Vec<PathBuf>,
    /// Ranking JSON; the resolved config goes to `<stem>.meta.json` beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankMotionConfig {
    pub dirs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDir {
    pub dir: PathBuf,
    /// Mean flow magnitude in pixels.
    pub score: f64,
    pub flows: usize,
}

impl RankMotionArgs {
    pub fn run(self) -> Result<(), CliError> {
        let dirs = (!self.dirs.is_empty()).then_some(&self.dirs);
        let cfg: RankMotionConfig = resolve(self.config.as_deref(), json!({ "dirs": dirs }))?;
        let ranking = execute(&cfg, &self.out)?;
        for (i, r) in ranking.iter().enumerate() {
            println!("{}\t{:.6}\t{}", i + 1, r.score, r.dir.display());
        }
        Ok(())
    }
}

fn read_dir_flows(dir: &Path) -> epic_core::Result<Vec<FlowField>> {
    let (prefix, start) = if io::sequence_path(dir, "next", 0, "flo").is_file() {
        ("next", 0)
    } else {
        ("fwd", 1)
    };
    let end = (start..)
        .take_while(|&k| io::sequence_path(dir, prefix, k, "flo").is_file())
        .last()
        .map_or(start, |k| k + 1);
    if end == start {
        return Err(epic_core::Error::Missing(format!(
            "no flows in {}: expected next_00000.flo or fwd_00001.flo",
            dir.display()
        )));
    }
    super::par_read(start..end, |k| {
        let (from, to) = if prefix == "next" { (k, k + 1) } else { (0, k) };
        io::read_flo(&io::sequence_path(dir, prefix, k, "flo"), from, to)
    })
}

/// Scores every directory and sorts by decreasing motion; ties keep input
/// order.
pub fn rank(cfg: &RankMotionConfig) -> Result<Vec<RankedDir>, CliError> {
    if cfg.dirs.is_empty() {
        return Err(CliError::Usage("no flow directories given".into()));
    }
    let mut ranked = cfg
        .dirs
        .iter()
        .map(|d| -> Result<RankedDir, CliError> {
            let flows = read_dir_flows(d)?;
            Ok(RankedDir {
                dir: d.clone(),
                score: flow_motion_score(&flows)?,
                flows: flows.len(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(ranked)
}

pub fn execute(cfg: &RankMotionConfig, out: &Path) -> Result<Vec<RankedDir>, CliError> {
    let ranking = rank(cfg)?;
    let text = serde_json::to_string_pretty(&json!({ "ranking": ranking })).expect("ranking serializes");
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        super::create_dir(parent)?;
    }
    std::fs::write(out, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    write_meta(&sibling_meta_path(out), "rank-motion", cfg)?;
    Ok(ranking)
}
