//! Episode-level evaluation, multi-seed aggregation and the
//! enhanced-vs-baseline comparison report.

use crate::env::{EnvError, EpisodeSampler, FetchEnv, ObservationMode};
use crate::perception::PerceptionConfig;
use crate::policy::{self, PolicyError, PolicyParams};
use crate::ppo::derive_seed;
use crate::reward::RewardWeights;
use crate::scene::{Action, EpisodeSpec, SceneLibrary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("no episode records")]
    EmptyRecords,
    #[error("no per-seed summaries")]
    EmptySummaries,
}

/// Whether evaluation samples from the policy or takes the argmax action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    Stochastic,
    Greedy,
}

/// One evaluated episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub spec: EpisodeSpec,
    pub success: bool,
    pub cumulative_reward: f64,
    /// Successful MoveAhead count: cells actually traversed.
    pub move_count: u32,
    /// Shortest-path length from the start cell to target adjacency.
    pub optimal_path: u32,
    /// PickupObject actions issued, up to and including the successful one.
    pub pickup_attempts: u32,
    pub steps: u32,
}

/// Evaluation episode set: `episodes_per_scene` episodes on each listed
/// scene, all derived from one seed.
#[derive(Debug, Clone)]
pub struct EvalProtocol {
    pub scene_ids: Vec<u8>,
    pub episodes_per_scene: usize,
    pub max_steps: u32,
    pub seed: u64,
    pub policy_mode: PolicyMode,
}

/// Runs the fixed-seed episode set without touching the parameters.
pub fn run_evaluation(
    params: &PolicyParams,
    library: &Arc<SceneLibrary>,
    perception: PerceptionConfig,
    weights: RewardWeights,
    mode: ObservationMode,
    protocol: &EvalProtocol,
) -> Result<Vec<EpisodeRecord>, EvalError> {
    let mut records = Vec::with_capacity(protocol.scene_ids.len() * protocol.episodes_per_scene);
    for &scene_id in &protocol.scene_ids {
        let mut sampler = EpisodeSampler::new(
            library.clone(),
            &[scene_id],
            protocol.max_steps,
            derive_seed(protocol.seed, scene_id as u64),
        )?;
        let mut action_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(protocol.seed, 1000 + scene_id as u64));
        for _ in 0..protocol.episodes_per_scene {
            let spec = sampler.sample();
            records.push(run_episode(
                params,
                library,
                perception,
                weights,
                mode,
                spec,
                protocol.policy_mode,
                &mut action_rng,
            )?);
        }
    }
    Ok(records)
}

/// Plays one episode to termination and returns its record.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    params: &PolicyParams,
    library: &Arc<SceneLibrary>,
    perception: PerceptionConfig,
    weights: RewardWeights,
    mode: ObservationMode,
    spec: EpisodeSpec,
    policy_mode: PolicyMode,
    action_rng: &mut ChaCha8Rng,
) -> Result<EpisodeRecord, EvalError> {
    let mut env = FetchEnv::new(library.clone(), perception, weights, mode, spec)?;
    let success;
    let steps;
    loop {
        let obs = env.observation().expect("non-terminal state");
        let output = policy::forward(params, &obs.features, &obs.context)?;
        let action_idx = match policy_mode {
            PolicyMode::Stochastic => policy::sample_action(&output, action_rng).0,
            PolicyMode::Greedy => policy::greedy_action(&output),
        };
        let action = Action::from_index(action_idx).expect("index in range");
        let (outcome, _) = env.step(action)?;
        if outcome.terminal {
            success = outcome.success;
            steps = outcome.steps_elapsed;
            break;
        }
    }
    Ok(EpisodeRecord {
        spec,
        success,
        cumulative_reward: env.cumulative_reward(),
        move_count: env.move_count(),
        optimal_path: env.optimal_path(),
        pickup_attempts: env.pickup_attempts(),
        steps,
    })
}

/// Percentage of episodes that ended in a successful target pickup.
pub fn success_rate(records: &[EpisodeRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let successes = records.iter().filter(|r| r.success).count();
    Ok(100.0 * successes as f64 / records.len() as f64)
}

/// Mean total reward per episode, over all episodes.
pub fn average_cumulative_reward(records: &[EpisodeRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    Ok(records.iter().map(|r| r.cumulative_reward).sum::<f64>() / records.len() as f64)
}

/// Mean of `100 * optimal_path / max(move_count, 1)` over successful
/// episodes; episodes that start adjacent to the target contribute 100.
/// Absent when nothing succeeded.
pub fn navigation_efficiency(records: &[EpisodeRecord]) -> Option<f64> {
    let successful: Vec<_> = records.iter().filter(|r| r.success).collect();
    if successful.is_empty() {
        return None;
    }
    let sum: f64 = successful
        .iter()
        .map(|r| {
            if r.optimal_path == 0 {
                100.0
            } else {
                100.0 * r.optimal_path as f64 / r.move_count.max(1) as f64
            }
        })
        .sum();
    Some(sum / successful.len() as f64)
}

/// Mean pickup attempts over successful episodes, counting the successful
/// attempt; a perfect agent scores 1.0. Absent when nothing succeeded.
pub fn interaction_efficiency(records: &[EpisodeRecord]) -> Option<f64> {
    let successful: Vec<_> = records.iter().filter(|r| r.success).collect();
    if successful.is_empty() {
        return None;
    }
    let sum: f64 = successful.iter().map(|r| r.pickup_attempts as f64).sum();
    Some(sum / successful.len() as f64)
}

/// Metrics of one seed's evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub success_rate_pct: f64,
    pub avg_cumulative_reward: f64,
    pub navigation_efficiency_pct: Option<f64>,
    pub interaction_efficiency: Option<f64>,
    pub episode_count: usize,
}

/// Collapses one evaluation run into its four metrics.
pub fn summarize(records: &[EpisodeRecord]) -> Result<SeedSummary, EvalError> {
    Ok(SeedSummary {
        success_rate_pct: success_rate(records)?,
        avg_cumulative_reward: average_cumulative_reward(records)?,
        navigation_efficiency_pct: navigation_efficiency(records),
        interaction_efficiency: interaction_efficiency(records),
        episode_count: records.len(),
    })
}

/// Mean and across-seed sample standard deviation of one metric. The
/// standard deviation is absent below two seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub std: Option<f64>,
}

fn aggregate_values(values: &[f64]) -> MetricAggregate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n >= 2 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Some(var.sqrt())
    } else {
        None
    };
    MetricAggregate { mean, std }
}

/// Multi-seed metrics: per-metric mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub success_rate: MetricAggregate,
    pub avg_cumulative_reward: MetricAggregate,
    pub navigation_efficiency: Option<MetricAggregate>,
    pub interaction_efficiency: Option<MetricAggregate>,
    pub seeds: usize,
    pub episode_count: usize,
}

/// Aggregates per-seed summaries. Metrics that are absent in some seeds
/// aggregate over the seeds where they exist.
pub fn aggregate_seeds(summaries: &[SeedSummary]) -> Result<MetricsSummary, EvalError> {
    if summaries.is_empty() {
        return Err(EvalError::EmptySummaries);
    }
    let success: Vec<f64> = summaries.iter().map(|s| s.success_rate_pct).collect();
    let reward: Vec<f64> = summaries.iter().map(|s| s.avg_cumulative_reward).collect();
    let nav: Vec<f64> = summaries
        .iter()
        .filter_map(|s| s.navigation_efficiency_pct)
        .collect();
    let inter: Vec<f64> = summaries
        .iter()
        .filter_map(|s| s.interaction_efficiency)
        .collect();
    Ok(MetricsSummary {
        success_rate: aggregate_values(&success),
        avg_cumulative_reward: aggregate_values(&reward),
        navigation_efficiency: (!nav.is_empty()).then(|| aggregate_values(&nav)),
        interaction_efficiency: (!inter.is_empty()).then(|| aggregate_values(&inter)),
        seeds: summaries.len(),
        episode_count: summaries.iter().map(|s| s.episode_count).sum(),
    })
}

/// One comparison-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub enhanced: Option<MetricAggregate>,
    pub baseline: Option<MetricAggregate>,
    /// `(enhanced - baseline) / baseline * 100`; absent when the baseline
    /// mean is zero or either side is missing.
    pub relative_change_pct: Option<f64>,
}

/// The full comparison: four metric rows plus relative changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

fn comparison_row(
    metric: &str,
    enhanced: Option<MetricAggregate>,
    baseline: Option<MetricAggregate>,
) -> ComparisonRow {
    let relative_change_pct = match (enhanced, baseline) {
        (Some(e), Some(b)) if b.mean != 0.0 => Some((e.mean - b.mean) / b.mean * 100.0),
        _ => None,
    };
    ComparisonRow {
        metric: metric.to_string(),
        enhanced,
        baseline,
        relative_change_pct,
    }
}

/// Builds the comparison table between the two agents' aggregates.
pub fn compare_report(enhanced: &MetricsSummary, baseline: &MetricsSummary) -> ComparisonReport {
    ComparisonReport {
        rows: vec![
            comparison_row(
                "Success Rate (%)",
                Some(enhanced.success_rate),
                Some(baseline.success_rate),
            ),
            comparison_row(
                "Avg. Cumulative Reward",
                Some(enhanced.avg_cumulative_reward),
                Some(baseline.avg_cumulative_reward),
            ),
            comparison_row(
                "Navigation Efficiency (%)",
                enhanced.navigation_efficiency,
                baseline.navigation_efficiency,
            ),
            comparison_row(
                "Interaction Efficiency",
                enhanced.interaction_efficiency,
                baseline.interaction_efficiency,
            ),
        ],
    }
}

impl ComparisonReport {
    /// Plain-text table. Interaction efficiency is lower-is-better; the
    /// relative-change column uses the same `(enhanced - baseline) /
    /// baseline` convention for every row.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:>20} {:>20} {:>12}\n",
            "Metric", "Enhanced", "Baseline", "Change (%)"
        ));
        for row in &self.rows {
            let fmt = |agg: &Option<MetricAggregate>| match agg {
                Some(a) => match a.std {
                    Some(std) => format!("{:.1} ± {:.1}", a.mean, std),
                    None => format!("{:.1}", a.mean),
                },
                None => "-".to_string(),
            };
            let change = match row.relative_change_pct {
                Some(c) => format!("{c:+.1}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<28} {:>20} {:>20} {:>12}\n",
                row.metric,
                fmt(&row.enhanced),
                fmt(&row.baseline),
                change
            ));
        }
        out
    }
}

/// Serializes episode records as line-delimited `key=value` text.
pub fn render_record_line(record: &EpisodeRecord) -> String {
    format!(
        "scene={} target={} seed={} success={} reward={:.6} moves={} optimal={} pickups={} steps={}",
        record.spec.scene_id,
        record.spec.target_class.name(),
        record.spec.rng_seed,
        record.success,
        record.cumulative_reward,
        record.move_count,
        record.optimal_path,
        record.pickup_attempts,
        record.steps
    )
}
