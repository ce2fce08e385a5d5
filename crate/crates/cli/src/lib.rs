//! `epic` command-line front end.
//!
//! Every subcommand resolves its configuration from defaults, an optional
//! `--config` JSON file and explicit flags (in increasing precedence) and
//! writes the resolved configuration to `meta.json` next to its outputs.
//! Exit codes: 0 success, 2 usage, 3 input format, 4 pipeline invariant.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;

use clap::{Parser, Subcommand};

use commands::{
    build_anchor::BuildAnchorArgs, eval::EvalArgs, fuse_demo::FuseDemoArgs, rank_motion::RankMotionArgs,
    render_anchor::RenderAnchorArgs, render_v2v::RenderV2vArgs, synth::SynthArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Core(epic_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Core(e) => match e.kind() {
                epic_core::ErrorKind::Usage => 2,
                epic_core::ErrorKind::InputFormat => 3,
                epic_core::ErrorKind::Invariant => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<epic_core::Error> for CliError {
    fn from(e: epic_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "epic",
    version,
    about = "Anchor-video construction, rendering and evaluation"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes output bytes.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene bundle with exact flows and visibility.
    Synth(SynthArgs),
    /// Mask a source video by first-frame visibility from optical flow.
    BuildAnchor(BuildAnchorArgs),
    /// Render an anchor from one image and depth along a trajectory.
    RenderAnchor(RenderAnchorArgs),
    /// Render a per-frame (dynamic) point-cloud anchor for video re-shooting.
    RenderV2v(RenderV2vArgs),
    /// Camera-trajectory metrics, mean and std over seeds.
    Eval(EvalArgs),
    /// Run the toy denoising trace with latent fusion and audit each step.
    FuseDemo(FuseDemoArgs),
    /// Rank flow directories by mean flow magnitude.
    RankMotion(RankMotionArgs),
}

impl Command {
    pub fn run(self) -> Result<(), CliError> {
        match self {
            Command::Synth(a) => a.run(),
            Command::BuildAnchor(a) => a.run(),
            Command::RenderAnchor(a) => a.run(),
            Command::RenderV2v(a) => a.run(),
            Command::Eval(a) => a.run(),
            Command::FuseDemo(a) => a.run(),
            Command::RankMotion(a) => a.run(),
        }
    }
}

/// Runs a parsed command line on a pool of `workers` threads.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        builder = builder.num_threads(n as usize);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cli.workers.unwrap_or(0))))?;
    pool.install(|| cli.command.run())
}

/// Parses `args` (including the program name), runs, reports errors on
/// stderr and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("epic: error: {e}");
            e.exit_code()
        }
    }
}
