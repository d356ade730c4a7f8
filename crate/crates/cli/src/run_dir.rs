//! Run-directory layout, manifests and curve files.
//!
//! Every per-seed run directory holds:
//!
//! ```text
//! metrics.csv            one line per update
//! checkpoint.bin         parameters + optimizer moments
//! config_snapshot.toml   the resolved config with this run's single seed
//! manifest.toml          config hash, code version, seed, wall time
//! curves/<metric>.csv    plot-ready (step, value) series
//! ```
//!
//! Re-running `gridfetch train --config config_snapshot.toml` reproduces
//! the metrics log byte for byte.

use crate::CliError;
use gridfetch_core::ppo::{TrainResult, UpdateStats};
use gridfetch_core::ExperimentConfig;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub fn config_hash(config: &ExperimentConfig) -> Result<String, CliError> {
    let canonical = toml::to_string(config)
        .map_err(|e| CliError::Runtime(format!("serializing config: {e}")))?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_run_artifacts(
    run_dir: &Path,
    config: &ExperimentConfig,
    seed: u64,
    result: &TrainResult,
    wall_seconds: f64,
) -> Result<(), CliError> {
    let snapshot = ExperimentConfig {
        seeds: vec![seed],
        ..config.clone()
    };
    let snapshot_text = toml::to_string_pretty(&snapshot)
        .map_err(|e| CliError::Runtime(format!("serializing config snapshot: {e}")))?;
    std::fs::write(run_dir.join("config_snapshot.toml"), &snapshot_text)?;

    let manifest = format!(
        "config_hash = \"{}\"\ncode_version = \"{}\"\nmode = \"{}\"\nseed = {}\n\
         total_steps = {}\nupdates = {}\nearly_stopped = {}\nwall_time_seconds = {:.3}\n",
        config_hash(&snapshot)?,
        env!("CARGO_PKG_VERSION"),
        config.mode.name(),
        seed,
        result.steps,
        result.updates,
        result.early_stopped,
        wall_seconds,
    );
    std::fs::write(run_dir.join("manifest.toml"), manifest)?;
    write_curves(run_dir, &result.stats)?;
    Ok(())
}

/// One (step, value) series file per logged metric.
fn write_curves(run_dir: &Path, stats: &[UpdateStats]) -> Result<(), CliError> {
    let curves_dir = run_dir.join("curves");
    std::fs::create_dir_all(&curves_dir)?;
    let series: [(&str, fn(&UpdateStats) -> f64); 8] = [
        ("mean_reward", |s| s.mean_reward),
        ("success_rate", |s| s.success_rate),
        ("policy_loss", |s| s.policy_loss),
        ("value_loss", |s| s.value_loss),
        ("entropy", |s| s.entropy),
        ("clip_fraction", |s| s.clip_fraction),
        ("approx_kl", |s| s.approx_kl),
        ("grad_norm", |s| s.grad_norm),
    ];
    for (name, extract) in series {
        let mut file = std::io::BufWriter::new(std::fs::File::create(
            curves_dir.join(format!("{name}.csv")),
        )?);
        writeln!(file, "step,{name}")?;
        for s in stats {
            writeln!(file, "{},{:.6}", s.step, extract(s))?;
        }
        file.flush()?;
    }
    Ok(())
}

/// Recursively collects `summary.toml` files under a run directory tree.
pub fn find_summaries(dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let mut found = Vec::new();
    collect_summaries(dir, &mut found)?;
    found.sort();
    Ok(found)
}

fn collect_summaries(dir: &Path, found: &mut Vec<std::path::PathBuf>) -> Result<(), CliError> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_summaries(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == "summary.toml") {
            found.push(path);
        }
    }
    Ok(())
}
