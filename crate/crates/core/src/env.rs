//! Episodic environment: scenes, perception and reward wired together.
//!
//! A [`FetchEnv`] owns one episode at a time. Observations are computed once
//! per state so every state visit consumes the perception noise stream
//! exactly once; the stream itself is seeded per episode from the episode
//! spec, keeping whole rollouts reproducible.

use crate::perception::{self, FeatureTensor, PerceptionConfig};
use crate::reward::{self, RewardBreakdown, RewardWeights};
use crate::scene::{
    self, Action, AgentPose, Cell, EpisodeSpec, Heading, ObjectClass, Pitch, SceneError,
    SceneLibrary, SceneState, StepOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Reward(#[from] reward::RewardError),
    #[error(transparent)]
    Perception(#[from] perception::PerceptionError),
    #[error("scene set is empty or contains no valid episodes")]
    NoValidEpisodes,
}

/// Which observation encoder feeds the policy. Everything else — scenes,
/// reward, algorithm, hyperparameters — is identical across modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    Baseline,
    Enhanced,
}

impl ObservationMode {
    pub fn channel_count(self) -> usize {
        match self {
            ObservationMode::Baseline => perception::channels::BASELINE_COUNT,
            ObservationMode::Enhanced => perception::channels::ENHANCED_COUNT,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObservationMode::Baseline => "baseline",
            ObservationMode::Enhanced => "enhanced",
        }
    }
}

/// Draws episode specs uniformly over the configured scenes, the pickupable
/// classes present in the drawn scene, and the free floor cells.
#[derive(Debug, Clone)]
pub struct EpisodeSampler {
    library: Arc<SceneLibrary>,
    scene_ids: Vec<u8>,
    max_steps: u32,
    rng: ChaCha8Rng,
}

impl EpisodeSampler {
    pub fn new(
        library: Arc<SceneLibrary>,
        scene_ids: &[u8],
        max_steps: u32,
        seed: u64,
    ) -> Result<Self, EnvError> {
        if scene_ids.is_empty() || max_steps == 0 {
            return Err(EnvError::NoValidEpisodes);
        }
        for &id in scene_ids {
            let scene = library.scene(id).ok_or(EnvError::Scene(SceneError::UnknownScene(id)))?;
            if !scene.objects.iter().any(|o| o.pickupable) {
                return Err(EnvError::NoValidEpisodes);
            }
        }
        Ok(EpisodeSampler {
            library,
            scene_ids: scene_ids.to_vec(),
            max_steps,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn library(&self) -> &Arc<SceneLibrary> {
        &self.library
    }

    /// Next episode spec. Deterministic given the constructor seed.
    pub fn sample(&mut self) -> EpisodeSpec {
        let scene_id = self.scene_ids[self.rng.gen_range(0..self.scene_ids.len())];
        let scene = self.library.scene(scene_id).expect("validated scene id");

        let mut classes: Vec<ObjectClass> = scene
            .objects
            .iter()
            .filter(|o| o.pickupable)
            .map(|o| o.class)
            .collect();
        classes.sort_by_key(|c| c.id());
        classes.dedup();
        let target_class = classes[self.rng.gen_range(0..classes.len())];

        let free_cells: Vec<Cell> = scene
            .map
            .floor_cells()
            .filter(|&c| !scene.objects.iter().any(|o| o.footprint.contains(&c)))
            .collect();
        let cell = free_cells[self.rng.gen_range(0..free_cells.len())];
        let heading = Heading::ALL[self.rng.gen_range(0..4)];

        EpisodeSpec {
            scene_id,
            target_class,
            start_pose: AgentPose {
                cell,
                heading,
                pitch: Pitch::Level,
                holding: None,
            },
            max_steps: self.max_steps,
            rng_seed: self.rng.gen(),
        }
    }
}

/// The policy-facing observation: feature planes plus the target one-hot.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub features: FeatureTensor,
    pub context: Vec<f64>,
}

/// One running episode with perception, reward bookkeeping and per-episode
/// tallies for the evaluation metrics.
#[derive(Debug, Clone)]
pub struct FetchEnv {
    library: Arc<SceneLibrary>,
    perception: PerceptionConfig,
    weights: RewardWeights,
    mode: ObservationMode,
    spec: EpisodeSpec,
    state: SceneState,
    noise_rng: ChaCha8Rng,
    distance_field: Vec<Option<u32>>,
    prev_distance: u32,
    observation: Option<Observation>,
    cumulative_reward: f64,
    move_count: u32,
    pickup_attempts: u32,
    optimal_path: u32,
}

impl FetchEnv {
    pub fn new(
        library: Arc<SceneLibrary>,
        perception: PerceptionConfig,
        weights: RewardWeights,
        mode: ObservationMode,
        spec: EpisodeSpec,
    ) -> Result<Self, EnvError> {
        let state = scene::reset(&library, &spec)?;
        let mut env = FetchEnv {
            library,
            perception,
            weights,
            mode,
            spec,
            state,
            noise_rng: ChaCha8Rng::seed_from_u64(spec.rng_seed),
            distance_field: Vec::new(),
            prev_distance: 0,
            observation: None,
            cumulative_reward: 0.0,
            move_count: 0,
            pickup_attempts: 0,
            optimal_path: 0,
        };
        env.start_episode()?;
        Ok(env)
    }

    /// Resets onto a new episode spec.
    pub fn reset(&mut self, spec: EpisodeSpec) -> Result<(), EnvError> {
        self.state = scene::reset(&self.library, &spec)?;
        self.spec = spec;
        self.noise_rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        self.start_episode()
    }

    fn start_episode(&mut self) -> Result<(), EnvError> {
        let goal_cells: Vec<Cell> = self
            .state
            .objects
            .iter()
            .filter(|o| o.class == self.state.target_class)
            .flat_map(|o| o.footprint.iter().copied())
            .collect();
        self.distance_field = scene::distance_field_to_adjacency(&self.state.map, &goal_cells);
        self.prev_distance = self
            .field_distance(self.state.agent.cell)
            .ok_or(reward::RewardError::UnreachableTarget)?;
        self.optimal_path = self.prev_distance;
        self.cumulative_reward = 0.0;
        self.move_count = 0;
        self.pickup_attempts = 0;
        self.observation = Some(self.encode()?);
        Ok(())
    }

    fn field_distance(&self, cell: Cell) -> Option<u32> {
        let idx = cell.y as usize * self.state.map.width() + cell.x as usize;
        self.distance_field[idx]
    }

    fn encode(&mut self) -> Result<Observation, EnvError> {
        let features = match self.mode {
            ObservationMode::Baseline => {
                perception::encode_baseline(&self.state, &self.perception)
            }
            ObservationMode::Enhanced => {
                let detections =
                    perception::detect(&self.state, &self.perception, &mut self.noise_rng);
                let masks = perception::segment(
                    &detections,
                    &self.state,
                    &self.perception,
                    &mut self.noise_rng,
                );
                perception::encode_enhanced(
                    &detections,
                    &masks,
                    self.state.target_class,
                    &self.state,
                    &self.perception,
                )?
            }
        };
        Ok(Observation {
            features,
            context: perception::target_context(self.state.target_class),
        })
    }

    /// Observation of the current state. Absent on terminal states.
    pub fn observation(&self) -> Option<&Observation> {
        self.observation.as_ref()
    }

    /// Applies one action, returning the outcome flags and reward terms.
    pub fn step(&mut self, action: Action) -> Result<(StepOutcome, RewardBreakdown), EnvError> {
        let outcome = scene::step(&mut self.state, action)?;
        // Distance is re-queried after every step; on the success step the
        // episode ends, so the final delta keeps the pre-pickup distance.
        let new_distance = if outcome.success {
            self.prev_distance
        } else {
            self.field_distance(self.state.agent.cell)
                .ok_or(reward::RewardError::UnreachableTarget)?
        };
        let breakdown = reward::compute_reward(self.prev_distance, new_distance, &outcome, &self.weights);
        self.prev_distance = new_distance;
        self.cumulative_reward += breakdown.total;
        if action == Action::MoveAhead && !outcome.collided {
            self.move_count += 1;
        }
        if action == Action::PickupObject {
            self.pickup_attempts += 1;
        }
        self.observation = if outcome.terminal {
            None
        } else {
            Some(self.encode()?)
        };
        Ok((outcome, breakdown))
    }

    pub fn state(&self) -> &SceneState {
        &self.state
    }

    pub fn spec(&self) -> &EpisodeSpec {
        &self.spec
    }

    pub fn mode(&self) -> ObservationMode {
        self.mode
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative_reward
    }

    pub fn move_count(&self) -> u32 {
        self.move_count
    }

    pub fn pickup_attempts(&self) -> u32 {
        self.pickup_attempts
    }

    /// Shortest-path length from the episode's start cell to target
    /// adjacency.
    pub fn optimal_path(&self) -> u32 {
        self.optimal_path
    }
}
