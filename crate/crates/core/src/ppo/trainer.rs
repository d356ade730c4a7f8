//! The training loop: collect, estimate advantages, update, evaluate.

use super::{
    collect_rollout, compute_gae, derive_seed, optimizer_step, EnvPool, FinishedEpisode,
    OptimizerMoments, PpoError, TrainConfig, UpdateStats,
};
use crate::env::{EpisodeSampler, ObservationMode};
use crate::eval::{self, EvalProtocol, PolicyMode};
use crate::perception::PerceptionConfig;
use crate::policy::{
    self, backward, save_checkpoint, LossSpec, NetworkSpec, PolicyParams, Sample,
};
use crate::reward::RewardWeights;
use crate::scene::{SceneLibrary, NUM_CLASSES};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Everything the trainer needs besides the hyperparameters: the world,
/// the observation pipeline and the network shape.
#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub library: Arc<SceneLibrary>,
    pub scene_ids: Vec<u8>,
    pub max_steps: u32,
    pub perception: PerceptionConfig,
    pub reward: RewardWeights,
    pub network: NetworkSpec,
    pub mode: ObservationMode,
}

impl TrainSetup {
    fn validate(&self) -> Result<(), PpoError> {
        let expected_channels = self.mode.channel_count();
        if self.network.input_channels != expected_channels {
            return Err(PpoError::InvalidConfig(format!(
                "network expects {} input channels but {} observations have {}",
                self.network.input_channels,
                self.mode.name(),
                expected_channels
            )));
        }
        if self.network.window != self.perception.window() {
            return Err(PpoError::InvalidConfig(format!(
                "network window {} does not match perception window {}",
                self.network.window,
                self.perception.window()
            )));
        }
        if self.network.context_units != NUM_CLASSES {
            return Err(PpoError::InvalidConfig(format!(
                "context_units must be {NUM_CLASSES}, got {}",
                self.network.context_units
            )));
        }
        self.perception
            .validate()
            .map_err(PpoError::InvalidConfig)?;
        self.reward.validate().map_err(PpoError::InvalidConfig)?;
        Ok(())
    }
}

/// Output of one training run.
#[derive(Debug)]
pub struct TrainResult {
    pub params: PolicyParams,
    pub optimizer: OptimizerMoments,
    pub updates: usize,
    pub steps: u64,
    pub early_stopped: bool,
    pub checkpoint_path: PathBuf,
    pub metrics_path: PathBuf,
    pub stats: Vec<UpdateStats>,
}

pub const METRICS_HEADER: &str =
    "step,mean_reward,success_rate,policy_loss,value_loss,entropy,clip_fraction,approx_kl,grad_norm";

/// Episodes per scene used by the in-training plateau evaluation.
const PLATEAU_EPISODES_PER_SCENE: usize = 8;

/// Trains one agent. Writes `metrics.csv` (one line per update) and
/// `checkpoint.bin` (parameters plus optimizer moments) under `out_dir`.
/// On error the current state is still flushed to disk.
pub fn train(
    cfg: &TrainConfig,
    setup: &TrainSetup,
    out_dir: &Path,
) -> Result<TrainResult, PpoError> {
    cfg.validate()?;
    setup.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let metrics_path = out_dir.join("metrics.csv");
    let checkpoint_path = out_dir.join("checkpoint.bin");

    let mut params = policy::init_params(&setup.network, derive_seed(cfg.seed, 0))?;
    let mut optimizer = OptimizerMoments::zeros(params.parameter_count());
    let sampler = EpisodeSampler::new(
        setup.library.clone(),
        &setup.scene_ids,
        setup.max_steps,
        derive_seed(cfg.seed, 1),
    )?;
    let mut pool = EnvPool::new(sampler, setup.perception, setup.reward, setup.mode, 1)?;
    let mut action_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 3));

    let mut metrics = std::io::BufWriter::new(std::fs::File::create(&metrics_path)?);
    writeln!(metrics, "{METRICS_HEADER}")?;

    let mut state = LoopState {
        steps: 0,
        updates: 0,
        early_stopped: false,
        recent: VecDeque::with_capacity(RECENT_EPISODES),
        best_eval: f64::NEG_INFINITY,
        evals_since_improvement: 0,
        steps_at_last_eval: 0,
        stats: Vec::new(),
    };

    let loop_result = run_loop(
        cfg,
        setup,
        &mut params,
        &mut optimizer,
        &mut pool,
        &mut action_rng,
        &mut shuffle_rng,
        &mut metrics,
        &mut state,
    );

    // Flush state to disk whether or not the loop succeeded.
    metrics.flush()?;
    save_checkpoint(&checkpoint_path, &params, Some(&optimizer))?;
    loop_result?;

    Ok(TrainResult {
        params,
        optimizer,
        updates: state.updates,
        steps: state.steps,
        early_stopped: state.early_stopped,
        checkpoint_path,
        metrics_path,
        stats: state.stats,
    })
}

const RECENT_EPISODES: usize = 100;

struct LoopState {
    steps: u64,
    updates: usize,
    early_stopped: bool,
    recent: VecDeque<FinishedEpisode>,
    best_eval: f64,
    evals_since_improvement: usize,
    steps_at_last_eval: u64,
    stats: Vec<UpdateStats>,
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    cfg: &TrainConfig,
    setup: &TrainSetup,
    params: &mut PolicyParams,
    optimizer: &mut OptimizerMoments,
    pool: &mut EnvPool,
    action_rng: &mut ChaCha8Rng,
    shuffle_rng: &mut ChaCha8Rng,
    metrics: &mut impl Write,
    state: &mut LoopState,
) -> Result<(), PpoError> {
    let loss_spec = LossSpec {
        clip_epsilon: cfg.clip_epsilon,
        value_coef: cfg.value_coef,
        entropy_coef: cfg.entropy_coef,
    };

    while state.steps < cfg.total_steps {
        let horizon = cfg
            .rollout_horizon
            .min((cfg.total_steps - state.steps) as usize);
        let trajectories = collect_rollout(pool, params, horizon, action_rng)?;
        state.steps += horizon as u64;

        // Advantages and returns, flattened over all trajectories.
        let mut flat: Vec<(usize, usize)> = Vec::with_capacity(horizon);
        let mut advantages: Vec<f64> = Vec::with_capacity(horizon);
        let mut returns: Vec<f64> = Vec::with_capacity(horizon);
        for (ti, traj) in trajectories.iter().enumerate() {
            let (adv, ret) = compute_gae(
                &traj.rewards,
                &traj.values,
                &traj.dones,
                traj.bootstrap_value,
                cfg.gamma_discount,
                cfg.gae_lambda,
            );
            for t in 0..traj.len() {
                flat.push((ti, t));
            }
            advantages.extend(adv);
            returns.extend(ret);
        }
        if cfg.normalize_advantages {
            super::normalize_advantages(&mut advantages);
        }

        let mut batch_count = 0usize;
        let mut sums = UpdateSums::default();
        let mut indices: Vec<usize> = (0..flat.len()).collect();
        for _ in 0..cfg.epochs_per_update {
            indices.shuffle(shuffle_rng);
            for chunk in indices.chunks(cfg.minibatch_size) {
                let samples: Vec<Sample<'_>> = chunk
                    .iter()
                    .map(|&i| {
                        let (ti, t) = flat[i];
                        let traj = &trajectories[ti];
                        Sample {
                            features: &traj.features[t],
                            context: &traj.contexts[t],
                            action: traj.actions[t],
                            old_log_prob: traj.log_probs[t],
                            advantage: advantages[i],
                            return_target: returns[i],
                        }
                    })
                    .collect();
                let (grad, stats) = backward(params, &samples, &loss_spec)?;
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                optimizer_step(&mut params.data, &grad, optimizer, cfg.learning_rate)?;
                sums.add(&stats, norm);
                batch_count += 1;
            }
        }
        state.updates += 1;

        for episode in pool.drain_finished() {
            if state.recent.len() == RECENT_EPISODES {
                state.recent.pop_front();
            }
            state.recent.push_back(episode);
        }
        let (mean_reward, success_rate) = recent_stats(&state.recent);
        let update_stats = sums.into_stats(batch_count, state.steps, mean_reward, success_rate);
        writeln!(
            metrics,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            update_stats.step,
            update_stats.mean_reward,
            update_stats.success_rate,
            update_stats.policy_loss,
            update_stats.value_loss,
            update_stats.entropy,
            update_stats.clip_fraction,
            update_stats.approx_kl,
            update_stats.grad_norm
        )?;
        state.stats.push(update_stats);

        // Plateau detection on periodic evaluations.
        if state.steps - state.steps_at_last_eval >= cfg.eval_interval
            && state.steps < cfg.total_steps
        {
            state.steps_at_last_eval = state.steps;
            let protocol = EvalProtocol {
                scene_ids: setup.scene_ids.clone(),
                episodes_per_scene: PLATEAU_EPISODES_PER_SCENE,
                max_steps: setup.max_steps,
                seed: derive_seed(cfg.seed, 4_000_000 + state.updates as u64),
                policy_mode: PolicyMode::Stochastic,
            };
            let records = eval::run_evaluation(
                params,
                &setup.library,
                setup.perception,
                setup.reward,
                setup.mode,
                &protocol,
            )
            .map_err(|e| match e {
                eval::EvalError::Env(err) => PpoError::Env(err),
                eval::EvalError::Policy(err) => PpoError::Policy(err),
                other => PpoError::InvalidConfig(other.to_string()),
            })?;
            let rate = 100.0 * records.iter().filter(|r| r.success).count() as f64
                / records.len() as f64;
            if rate > state.best_eval + 1.0 {
                state.best_eval = rate;
                state.evals_since_improvement = 0;
            } else {
                state.evals_since_improvement += 1;
                if state.evals_since_improvement >= cfg.early_stop_patience {
                    state.early_stopped = true;
                    break;
                }
            }
        }
    }
    Ok(())
}

fn recent_stats(recent: &VecDeque<FinishedEpisode>) -> (f64, f64) {
    if recent.is_empty() {
        return (0.0, 0.0);
    }
    let n = recent.len() as f64;
    let reward = recent.iter().map(|e| e.cumulative_reward).sum::<f64>() / n;
    let success = 100.0 * recent.iter().filter(|e| e.success).count() as f64 / n;
    (reward, success)
}

#[derive(Default)]
struct UpdateSums {
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    clip_fraction: f64,
    approx_kl: f64,
    grad_norm: f64,
}

impl UpdateSums {
    fn add(&mut self, stats: &crate::policy::BatchStats, grad_norm: f64) {
        self.policy_loss += stats.policy_loss;
        self.value_loss += stats.value_loss;
        self.entropy += stats.entropy;
        self.clip_fraction += stats.clip_fraction;
        self.approx_kl += stats.approx_kl;
        self.grad_norm += grad_norm;
    }

    fn into_stats(
        self,
        batches: usize,
        step: u64,
        mean_reward: f64,
        success_rate: f64,
    ) -> UpdateStats {
        let inv = 1.0 / batches.max(1) as f64;
        UpdateStats {
            step,
            mean_reward,
            success_rate,
            policy_loss: self.policy_loss * inv,
            value_loss: self.value_loss * inv,
            entropy: self.entropy * inv,
            clip_fraction: self.clip_fraction * inv,
            approx_kl: self.approx_kl * inv,
            grad_norm: self.grad_norm * inv,
        }
    }
}
