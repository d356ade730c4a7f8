//! Gridworld kitchen fetch tasks for reinforcement-learning experiments.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`scene`] — deterministic gridworld kitchens with a target-object fetch
//!   protocol, field-of-view queries and a shortest-path oracle.
//! * [`perception`] — simulated object detection and segmentation over the
//!   agent's egocentric view, plus the two observation encoders (raw
//!   appearance baseline and the detection-enriched encoding).
//! * [`reward`] — distance-shaped reward with success bonus and
//!   collision/invalid-action penalty.
//! * [`policy`] — a small convolutional policy/value network with exact
//!   analytic gradients (no autodiff dependency).
//! * [`ppo`] — rollout collection, advantage estimation, the clipped
//!   surrogate objective, the optimizer and the training loop.
//! * [`env`] — glue tying scenes, perception and reward into an episodic
//!   environment with a seeded episode sampler.
//! * [`eval`] — episode-level evaluation metrics, multi-seed aggregation and
//!   the enhanced-vs-baseline comparison report.
//! * [`config`] — the experiment configuration document shared by the CLI.

pub mod config;
pub mod env;
pub mod eval;
pub mod perception;
pub mod policy;
pub mod ppo;
pub mod reward;
pub mod scene;

pub use config::ExperimentConfig;
pub use env::{EpisodeSampler, FetchEnv, ObservationMode};
pub use perception::{Detection, FeatureTensor, PerceptionConfig, SegmentMask};
pub use policy::{NetworkSpec, PolicyOutput, PolicyParams};
pub use ppo::{TrainConfig, Trajectory, UpdateStats};
pub use reward::{RewardBreakdown, RewardWeights};
pub use scene::{
    Action, AgentPose, Cell, CellKind, EpisodeSpec, GridMap, Heading, HeightBand, ObjectClass,
    Pitch, SceneObject, SceneState, StepOutcome,
};
