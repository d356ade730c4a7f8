//! Command-line front end for the gridworld fetch experiments.
//!
//! Subcommands: `train`, `eval`, `compare`, `inspect`. Exit codes: 0 on
//! success, 1 on runtime failure, 2 on usage/config errors.

mod commands;
mod overrides;
mod run_dir;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable overriding the output root directory.
pub const OUTPUT_ROOT_ENV: &str = "GRIDFETCH_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "gridfetch", version, about = "Gridworld kitchen fetch experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent per configured seed.
    Train {
        /// Experiment config file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Dotted-path config overrides, e.g. `train.total_steps=4096`.
        #[arg(long = "override", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        /// Output root; takes precedence over the config and environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and write records plus a metrics summary.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Dotted-path config overrides.
        #[arg(long = "override", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        /// Episodes per scene (overrides the config).
        #[arg(long)]
        episodes: Option<usize>,
        /// Take argmax actions instead of sampling.
        #[arg(long)]
        greedy: bool,
        /// Episode-set seed (default: the config's first seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: `eval/` next to the checkpoint).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two run directories (enhanced vs baseline).
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Machine-readable report path.
        #[arg(long, default_value = "comparison.toml")]
        out: PathBuf,
    },
    /// Inspect assets, the observation schema or a checkpoint.
    #[command(subcommand)]
    Inspect(InspectTarget),
}

#[derive(Subcommand)]
enum InspectTarget {
    /// Render a scene: a shipped id (1-4) or an asset file path.
    Scene { which: String },
    /// Print the observation channel map.
    Schema {
        /// Show the baseline schema instead of the enhanced one.
        #[arg(long)]
        baseline: bool,
    },
    /// Print checkpoint header information.
    Checkpoint { path: PathBuf },
}

/// Errors sorted by exit code: usage/config problems exit 2, runtime
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            config,
            overrides,
            output_dir,
        } => commands::train(&config, &overrides, output_dir.as_deref()),
        Command::Eval {
            checkpoint,
            config,
            overrides,
            episodes,
            greedy,
            seed,
            out,
        } => commands::eval(
            &checkpoint,
            &config,
            &overrides,
            episodes,
            greedy,
            seed,
            out.as_deref(),
        ),
        Command::Compare { dir_a, dir_b, out } => commands::compare(&dir_a, &dir_b, &out),
        Command::Inspect(target) => match target {
            InspectTarget::Scene { which } => commands::inspect_scene(&which),
            InspectTarget::Schema { baseline } => commands::inspect_schema(!baseline),
            InspectTarget::Checkpoint { path } => commands::inspect_checkpoint(&path),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
