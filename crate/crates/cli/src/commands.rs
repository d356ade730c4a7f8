//! The four subcommands.

use crate::overrides::load_config;
use crate::run_dir::{find_summaries, write_run_artifacts};
use crate::{CliError, OUTPUT_ROOT_ENV};
use gridfetch_core::env::ObservationMode;
use gridfetch_core::eval::{
    self, EvalProtocol, MetricsSummary, PolicyMode, SeedSummary,
};
use gridfetch_core::policy::{load_checkpoint, NetworkSpec};
use gridfetch_core::ppo::{train as run_training, TrainSetup};
use gridfetch_core::scene::{load_scene, CellKind, ParsedScene, SceneLibrary};
use gridfetch_core::{perception, ExperimentConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

fn output_root(config: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Ok(dir) = std::env::var(OUTPUT_ROOT_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from(&config.output_dir)
}

fn train_setup(config: &ExperimentConfig) -> TrainSetup {
    TrainSetup {
        library: Arc::new(SceneLibrary::shipped()),
        scene_ids: config.scenes.clone(),
        max_steps: config.max_steps,
        perception: config.perception,
        reward: config.reward,
        network: config.network_spec(),
        mode: config.mode,
    }
}

pub fn train(
    config_path: &Path,
    overrides: &[String],
    output_dir: Option<&Path>,
) -> Result<(), CliError> {
    let config = load_config(config_path, overrides)?;
    let root = output_root(&config, output_dir);
    let setup = train_setup(&config);

    let outcomes: Vec<(u64, Result<String, CliError>)> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let run_dir = root.join(format!("{}-seed{}", config.mode.name(), seed));
            let started = std::time::Instant::now();
            let mut train_cfg = config.train.clone();
            train_cfg.seed = seed;
            let outcome = run_training(&train_cfg, &setup, &run_dir)
                .map_err(|e| CliError::Runtime(format!("seed {seed}: {e}")))
                .and_then(|result| {
                    write_run_artifacts(
                        &run_dir,
                        &config,
                        seed,
                        &result,
                        started.elapsed().as_secs_f64(),
                    )?;
                    Ok(format!(
                        "seed {seed}: {} steps, {} updates{} -> {}",
                        result.steps,
                        result.updates,
                        if result.early_stopped { " (early stop)" } else { "" },
                        run_dir.display()
                    ))
                });
            (seed, outcome)
        })
        .collect();

    let mut first_error = None;
    for (_, outcome) in outcomes {
        match outcome {
            Ok(line) => println!("{line}"),
            Err(e) => {
                eprintln!("error: {}", e.message());
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn describe_spec(spec: &NetworkSpec) -> String {
    format!(
        "{}ch x {}x{} window, conv {:?}, hidden {}, context {}",
        spec.input_channels,
        spec.window,
        spec.window,
        spec.conv_layers
            .iter()
            .map(|c| (c.out_channels, c.kernel, c.stride))
            .collect::<Vec<_>>(),
        spec.hidden_units,
        spec.context_units
    )
}

#[allow(clippy::too_many_arguments)]
pub fn eval(
    checkpoint_path: &Path,
    config_path: &Path,
    overrides: &[String],
    episodes: Option<usize>,
    greedy: bool,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if !checkpoint_path.exists() {
        return Err(CliError::Usage(format!(
            "checkpoint {} does not exist",
            checkpoint_path.display()
        )));
    }
    let config = load_config(config_path, overrides)?;
    let checkpoint = load_checkpoint(checkpoint_path)
        .map_err(|e| CliError::Runtime(format!("loading checkpoint: {e}")))?;
    let expected = config.network_spec();
    if checkpoint.params.spec != expected {
        return Err(CliError::Usage(format!(
            "checkpoint/config shape mismatch: checkpoint is [{}], config expects [{}]",
            describe_spec(&checkpoint.params.spec),
            describe_spec(&expected)
        )));
    }
    let protocol = EvalProtocol {
        scene_ids: config.scenes.clone(),
        episodes_per_scene: episodes.unwrap_or(config.eval.episodes_per_scene),
        max_steps: config.max_steps,
        seed: seed.unwrap_or(config.seeds[0]),
        policy_mode: if greedy {
            PolicyMode::Greedy
        } else {
            config.eval.policy_mode
        },
    };
    let library = Arc::new(SceneLibrary::shipped());
    let records = eval::run_evaluation(
        &checkpoint.params,
        &library,
        config.perception,
        config.reward,
        config.mode,
        &protocol,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let summary = eval::summarize(&records).map_err(|e| CliError::Runtime(e.to_string()))?;

    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| {
            checkpoint_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join("eval")
        });
    std::fs::create_dir_all(&out_dir)?;
    let mut records_file =
        std::io::BufWriter::new(std::fs::File::create(out_dir.join("episodes.records"))?);
    for record in &records {
        writeln!(records_file, "{}", eval::render_record_line(record))?;
    }
    records_file.flush()?;
    let summary_text = toml::to_string_pretty(&summary)
        .map_err(|e| CliError::Runtime(format!("serializing summary: {e}")))?;
    std::fs::write(out_dir.join("summary.toml"), &summary_text)?;

    println!(
        "episodes: {}  success rate: {:.1}%  avg reward: {:.2}",
        summary.episode_count, summary.success_rate_pct, summary.avg_cumulative_reward
    );
    if let Some(nav) = summary.navigation_efficiency_pct {
        println!("navigation efficiency: {nav:.1}%");
    }
    if let Some(inter) = summary.interaction_efficiency {
        println!("interaction efficiency: {inter:.2}");
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ComparisonDocument {
    enhanced: MetricsSummary,
    baseline: MetricsSummary,
    report: eval::ComparisonReport,
}

fn load_side(dir: &Path) -> Result<(MetricsSummary, usize), CliError> {
    let paths = find_summaries(dir)?;
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "no summary.toml files under {}",
            dir.display()
        )));
    }
    let mut summaries = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = std::fs::read_to_string(path)?;
        let summary: SeedSummary = toml::from_str(&text).map_err(|e| {
            CliError::Runtime(format!("parsing {}: {e}", path.display()))
        })?;
        summaries.push(summary);
    }
    let aggregate =
        eval::aggregate_seeds(&summaries).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok((aggregate, summaries.len()))
}

pub fn compare(dir_a: &Path, dir_b: &Path, out: &Path) -> Result<(), CliError> {
    let (enhanced, n_a) = load_side(dir_a)?;
    let (baseline, n_b) = load_side(dir_b)?;
    if n_a != n_b {
        eprintln!("warning: seed-count mismatch: {n_a} vs {n_b} summaries; proceeding");
    }
    let report = eval::compare_report(&enhanced, &baseline);
    print!("{}", report.render_text());
    let document = ComparisonDocument {
        enhanced,
        baseline,
        report,
    };
    let text = toml::to_string_pretty(&document)
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))?;
    std::fs::write(out, text)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn render_scene(scene: &ParsedScene) -> String {
    let mut out = String::new();
    out.push_str(&format!("# id: {}\n# name: {}\n", scene.map.id(), scene.name));
    for y in 0..scene.map.height() as i32 {
        for x in 0..scene.map.width() as i32 {
            let cell = gridfetch_core::scene::Cell::new(x, y);
            let object = scene
                .objects
                .iter()
                .position(|o| o.footprint.contains(&cell));
            let ch = match object {
                Some(idx) => scene.letters[idx],
                None => match scene.map.kind(cell) {
                    CellKind::Obstacle => '#',
                    CellKind::Floor => '.',
                },
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out.push('\n');
    for (obj, letter) in scene.objects.iter().zip(&scene.letters) {
        out.push_str(&format!(
            "{letter}: {} ({}) at ({}, {}){}{}\n",
            obj.class.name(),
            obj.height_band.name(),
            obj.cell.x,
            obj.cell.y,
            if obj.footprint.len() > 1 {
                format!(", {} cells", obj.footprint.len())
            } else {
                String::new()
            },
            if obj.pickupable { "" } else { ", fixed" },
        ));
    }
    out
}

pub fn inspect_scene(which: &str) -> Result<(), CliError> {
    let rendered = if let Ok(id) = which.parse::<u8>() {
        let library = SceneLibrary::shipped();
        let scene = library
            .scene(id)
            .ok_or_else(|| CliError::Usage(format!("no shipped scene with id {id}")))?;
        render_scene(scene)
    } else {
        let text = std::fs::read_to_string(which)
            .map_err(|e| CliError::Usage(format!("cannot read scene {which}: {e}")))?;
        let scene =
            load_scene(&text).map_err(|e| CliError::Usage(format!("parsing {which}: {e}")))?;
        render_scene(&scene)
    };
    print!("{rendered}");
    Ok(())
}

pub fn inspect_schema(enhanced: bool) -> Result<(), CliError> {
    println!("{}", perception::observation_schema(enhanced));
    Ok(())
}

pub fn inspect_checkpoint(path: &Path) -> Result<(), CliError> {
    let checkpoint =
        load_checkpoint(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let spec = &checkpoint.params.spec;
    println!("format version: {}", gridfetch_core::policy::CHECKPOINT_VERSION);
    println!("network: {}", describe_spec(spec));
    println!("parameter count: {}", checkpoint.params.parameter_count());
    println!(
        "observation mode: {}",
        if spec.input_channels == ObservationMode::Baseline.channel_count() {
            "baseline"
        } else {
            "enhanced"
        }
    );
    match checkpoint.optimizer {
        Some(moments) => println!("optimizer moments: present (step {})", moments.step),
        None => println!("optimizer moments: absent"),
    }
    Ok(())
}
