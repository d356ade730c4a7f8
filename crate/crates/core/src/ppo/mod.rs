//! Clipped-surrogate policy optimization.
//!
//! Rollouts are collected from a pool of independent environments, turned
//! into advantage estimates by the exponentially-weighted recursion in
//! [`compute_gae`], and consumed by several epochs of shuffled minibatch
//! gradient steps on the composite loss.

mod gae;
mod loss;
mod optimizer;
mod rollout;
mod trainer;

pub use gae::compute_gae;
pub use loss::{ppo_loss, LossBreakdown};
pub use optimizer::{optimizer_step, OptimizerMoments};
pub use rollout::{collect_rollout, EnvPool, FinishedEpisode, Trajectory};
pub use trainer::{train, TrainResult, TrainSetup};

use crate::env::EnvError;
use crate::policy::{CheckpointError, PolicyError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("metrics/checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("non-finite probability ratio in surrogate loss")]
    NonFiniteRatio,
    #[error("non-finite gradient; optimizer step refused")]
    NonFiniteGradient,
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub gamma_discount: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub minibatch_size: usize,
    pub epochs_per_update: usize,
    pub rollout_horizon: usize,
    pub total_steps: u64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub normalize_advantages: bool,
    /// Evaluation cadence in environment steps.
    pub eval_interval: u64,
    /// Evaluations without a > 1 point success-rate improvement before
    /// training stops early.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 3e-4,
            gamma_discount: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            minibatch_size: 64,
            epochs_per_update: 4,
            rollout_horizon: 2048,
            total_steps: 200_000,
            value_coef: 0.5,
            entropy_coef: 0.01,
            normalize_advantages: true,
            eval_interval: 20_480,
            early_stop_patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        if !(self.gamma_discount > 0.0 && self.gamma_discount <= 1.0) {
            return Err(PpoError::InvalidConfig(format!(
                "gamma_discount must lie in (0, 1], got {}",
                self.gamma_discount
            )));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(PpoError::InvalidConfig(format!(
                "gae_lambda must lie in [0, 1], got {}",
                self.gae_lambda
            )));
        }
        if self.clip_epsilon <= 0.0 {
            return Err(PpoError::InvalidConfig(format!(
                "clip_epsilon must be positive, got {}",
                self.clip_epsilon
            )));
        }
        if self.minibatch_size == 0 || self.epochs_per_update == 0 || self.rollout_horizon == 0 {
            return Err(PpoError::InvalidConfig(
                "minibatch_size, epochs_per_update and rollout_horizon must be positive".into(),
            ));
        }
        if self.total_steps == 0 {
            return Err(PpoError::InvalidConfig("total_steps must be positive".into()));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(PpoError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Per-update diagnostics, one metrics-log line each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub step: u64,
    pub mean_reward: f64,
    pub success_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
}

/// Normalizes advantages in place to zero mean and unit standard deviation
/// (population convention), guarding degenerate batches with a floor on the
/// deviation. Applied once per update over the whole rollout.
pub fn normalize_advantages(values: &mut [f64]) {
    if values.len() < 2 {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}

/// Splitmix64 seed derivation: one master seed fans out into independent
/// deterministic streams.
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
