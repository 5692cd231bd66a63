mod commands;
mod config;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// EMG-driven grasping with vibrotactile feedback, simulated end to end.
#[derive(Debug, Parser)]
#[command(name = "hapgrip", version, about)]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// JSON object library to use instead of the built-in objects.
    #[arg(long, global = true)]
    pub library: Option<PathBuf>,
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    #[arg(long)]
    pub object: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capture baselines and derive vest and EMG calibrations for an object.
    Calibrate {
        #[command(flatten)]
        trial: TrialArgs,
    },
    /// Run one trial and record its trace, metrics and frames.
    Run {
        #[command(flatten)]
        trial: TrialArgs,
        /// haptic or non_haptic.
        #[arg(long)]
        condition: String,
        /// Skip writing tactile frames (replay needs them).
        #[arg(long)]
        no_frames: bool,
    },
    /// Run a grid of seeded trials and summarise it.
    Experiment {
        /// Trials per object and condition.
        #[arg(long)]
        n: usize,
        /// Comma-separated object names.
        #[arg(long, value_delimiter = ',')]
        objects: Vec<String>,
        /// Comma-separated conditions.
        #[arg(long, value_delimiter = ',', default_value = "haptic,non_haptic")]
        conditions: Vec<String>,
        #[arg(long)]
        base_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from a run's frames and compare them with its logs.
    Replay { dir: PathBuf },
    /// Render an experiment summary or a single run.
    Report {
        /// summary.json from `experiment`, or a run directory.
        input: PathBuf,
        /// table, json or csv.
        #[arg(long, default_value = "table")]
        format: String,
        /// Write here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Host live trials for the browser console over WebSocket.
    Serve {
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "object1")]
        object: String,
        #[arg(long, default_value = "manual")]
        condition: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for session logs.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit after this many sessions.
        #[arg(long)]
        max_sessions: Option<usize>,
        /// Step as fast as possible instead of in real time.
        #[arg(long)]
        fast: bool,
    },
}

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl From<hapgrip_core::harness::HarnessError> for Failure {
    fn from(e: hapgrip_core::harness::HarnessError) -> Self {
        if e.is_config() {
            Failure::Config(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, err) = match &f {
                Failure::Config(e) => ("configuration error", e),
                Failure::Runtime(e) => ("error", e),
            };
            eprintln!("hapgrip: {kind}: {err:#}");
            ExitCode::from(f.code())
        }
    }
}
