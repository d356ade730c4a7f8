//! Rollout collection over a pool of independent environments.

use super::PpoError;
use crate::env::{EpisodeSampler, FetchEnv, ObservationMode};
use crate::perception::{FeatureTensor, PerceptionConfig};
use crate::policy::{self, PolicyParams};
use crate::reward::RewardWeights;
use crate::scene::{Action, StepOutcome};
use rand::Rng;

/// Per-step record of one environment's experience. `dones` may be set at
/// interior positions: episodes auto-reset and the trajectory keeps going.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub features: Vec<FeatureTensor>,
    pub contexts: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub dones: Vec<bool>,
    pub outcomes: Vec<StepOutcome>,
    /// Value of the state after the final step, for truncation.
    pub bootstrap_value: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Summary of one finished episode, fed into the training metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinishedEpisode {
    pub cumulative_reward: f64,
    pub success: bool,
    pub steps: u32,
}

/// A set of independent environments plus the episode sampler that refills
/// them. Environments persist across rollouts so episodes can span update
/// boundaries.
#[derive(Debug, Clone)]
pub struct EnvPool {
    envs: Vec<FetchEnv>,
    sampler: EpisodeSampler,
    finished: Vec<FinishedEpisode>,
}

impl EnvPool {
    /// Pool over explicitly constructed environments; the sampler only
    /// serves auto-resets.
    pub fn from_parts(envs: Vec<FetchEnv>, sampler: EpisodeSampler) -> Self {
        assert!(!envs.is_empty(), "pool must hold at least one environment");
        EnvPool {
            envs,
            sampler,
            finished: Vec::new(),
        }
    }

    pub fn new(
        mut sampler: EpisodeSampler,
        perception: PerceptionConfig,
        weights: RewardWeights,
        mode: ObservationMode,
        pool_size: usize,
    ) -> Result<Self, PpoError> {
        assert!(pool_size > 0, "pool must hold at least one environment");
        let mut envs = Vec::with_capacity(pool_size);
        for _ in 0..pool_size {
            let spec = sampler.sample();
            envs.push(FetchEnv::new(
                sampler.library().clone(),
                perception,
                weights,
                mode,
                spec,
            )?);
        }
        Ok(EnvPool {
            envs,
            sampler,
            finished: Vec::new(),
        })
    }

    pub fn mode(&self) -> ObservationMode {
        self.envs[0].mode()
    }

    /// Episodes finished since the last drain, in completion order.
    pub fn drain_finished(&mut self) -> Vec<FinishedEpisode> {
        std::mem::take(&mut self.finished)
    }
}

/// Gathers exactly `horizon` environment steps, split evenly over the pool
/// (earlier environments absorb the remainder). Environments run in index
/// order, so the result is a pure function of the pool state, parameters
/// and rng stream.
pub fn collect_rollout<R: Rng>(
    pool: &mut EnvPool,
    params: &PolicyParams,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<Trajectory>, PpoError> {
    assert!(horizon > 0, "horizon must be positive");
    let n = pool.envs.len();
    let mut trajectories = Vec::with_capacity(n);
    for (i, env) in pool.envs.iter_mut().enumerate() {
        let share = horizon / n + usize::from(i < horizon % n);
        let mut traj = Trajectory::default();
        for _ in 0..share {
            let obs = env.observation().expect("pool envs are never terminal");
            let output = policy::forward(params, &obs.features, &obs.context)?;
            let (action_idx, log_prob) = policy::sample_action(&output, rng);
            traj.features.push(obs.features.clone());
            traj.contexts.push(obs.context.clone());
            traj.actions.push(action_idx);
            traj.values.push(output.value);
            traj.log_probs.push(log_prob);
            let action = Action::from_index(action_idx).expect("sampled index in range");
            let (outcome, breakdown) = env.step(action)?;
            traj.rewards.push(breakdown.total);
            traj.dones.push(outcome.terminal);
            traj.outcomes.push(outcome);
            if outcome.terminal {
                pool.finished.push(FinishedEpisode {
                    cumulative_reward: env.cumulative_reward(),
                    success: outcome.success,
                    steps: outcome.steps_elapsed,
                });
                let spec = pool.sampler.sample();
                env.reset(spec)?;
            }
        }
        if share > 0 {
            traj.bootstrap_value = if *traj.dones.last().expect("non-empty trajectory") {
                0.0
            } else {
                let obs = env.observation().expect("non-terminal state");
                policy::forward(params, &obs.features, &obs.context)?.value
            };
            trajectories.push(traj);
        }
    }
    Ok(trajectories)
}
