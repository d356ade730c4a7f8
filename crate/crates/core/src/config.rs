//! The experiment configuration document.
//!
//! One file describes a full experiment: world, observation mode, noise,
//! reward weights, network shape, training hyperparameters, evaluation
//! protocol and the seed list. Baseline and enhanced runs differ only in
//! `mode`, which guarantees both agents share the algorithm and every
//! hyperparameter.

use crate::env::ObservationMode;
use crate::eval::PolicyMode;
use crate::perception::PerceptionConfig;
use crate::policy::{ConvSpec, NetworkSpec};
use crate::ppo::TrainConfig;
use crate::reward::RewardWeights;
use crate::scene::NUM_CLASSES;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("config field `{path}`: {msg}")]
pub struct ConfigError {
    pub path: String,
    pub msg: String,
}

fn err(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        msg: msg.into(),
    }
}

/// Convolution stack and shared-layer width; input shape is derived from
/// the observation mode and perception window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkArch {
    pub conv_layers: Vec<ConvSpec>,
    pub hidden_units: usize,
}

impl Default for NetworkArch {
    fn default() -> Self {
        NetworkArch {
            conv_layers: vec![
                ConvSpec { out_channels: 16, kernel: 3, stride: 1 },
                ConvSpec { out_channels: 32, kernel: 3, stride: 1 },
            ],
            hidden_units: 128,
        }
    }
}

/// Evaluation protocol settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub episodes_per_scene: usize,
    pub policy_mode: PolicyMode,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            episodes_per_scene: 100,
            policy_mode: PolicyMode::Stochastic,
        }
    }
}

/// The whole experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenes: Vec<u8>,
    pub max_steps: u32,
    pub mode: ObservationMode,
    pub seeds: Vec<u64>,
    pub output_dir: String,
    pub perception: PerceptionConfig,
    pub reward: RewardWeights,
    pub network: NetworkArch,
    pub train: TrainConfig,
    pub eval: EvalSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenes: vec![1, 2, 3, 4],
            max_steps: 200,
            mode: ObservationMode::Enhanced,
            seeds: vec![1, 2, 3, 4, 5],
            output_dir: "runs".to_string(),
            perception: PerceptionConfig::default(),
            reward: RewardWeights::default(),
            network: NetworkArch::default(),
            train: TrainConfig::default(),
            eval: EvalSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Full network spec for this config's observation mode.
    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec {
            input_channels: self.mode.channel_count(),
            window: self.perception.window(),
            conv_layers: self.network.conv_layers.clone(),
            hidden_units: self.network.hidden_units,
            context_units: NUM_CLASSES,
            action_count: crate::scene::ACTION_COUNT,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scenes.is_empty() {
            return Err(err("scenes", "must list at least one scene id"));
        }
        if self.max_steps == 0 {
            return Err(err("max_steps", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(err("seeds", "must list at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(err("seeds", "seed list contains duplicates"));
        }
        self.perception
            .validate()
            .map_err(|msg| err("perception", msg))?;
        self.reward.validate().map_err(|msg| err("reward", msg))?;
        self.network_spec()
            .validate()
            .map_err(|e| err("network", e.to_string()))?;
        self.train
            .validate()
            .map_err(|e| err("train", e.to_string()))?;
        if self.eval.episodes_per_scene == 0 {
            return Err(err("eval.episodes_per_scene", "must be at least 1"));
        }
        Ok(())
    }
}
