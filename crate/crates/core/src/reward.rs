//! Step reward: distance shaping plus success bonus minus penalty.
//!
//! `total = alpha * delta_d + beta * success - gamma_pen * penalty`, with
//! `delta_d = prev_d - new_d` the change in shortest-path distance to the
//! target, `success` the target-pickup indicator and `penalty` set on
//! collisions and invalid actions. The combination is exact arithmetic:
//! no clipping or normalization happens here.

use crate::scene::{self, SceneState, StepOutcome};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("target is unreachable from the agent cell; episodes guarantee reachability")]
    UnreachableTarget,
}

/// Weighting factors. `gamma_pen` is the penalty weight, kept separate from
/// the discount factor used by the trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_pen: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        // gamma_pen deliberately small: invalid pickups are the agent's
        // main exploration tool, and a heavy penalty teaches it to stop
        // interacting before it ever finds the success bonus.
        RewardWeights {
            alpha: 1.0,
            beta: 10.0,
            gamma_pen: 0.1,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma_pen", self.gamma_pen),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

/// One step's reward terms, kept separate for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    /// `prev_d - new_d` in cells; positive when the agent got closer.
    pub delta_d: i64,
    pub success: bool,
    pub penalty: bool,
    pub total: f64,
}

/// Combines the three terms. `penalty` is the OR of collision and invalid
/// action; there is no magnitude distinction.
pub fn compute_reward(
    prev_d: u32,
    new_d: u32,
    outcome: &StepOutcome,
    weights: &RewardWeights,
) -> RewardBreakdown {
    let delta_d = prev_d as i64 - new_d as i64;
    let success = outcome.success;
    let penalty = outcome.collided || outcome.invalid_action;
    let total = weights.alpha * delta_d as f64 + weights.beta * f64::from(u8::from(success))
        - weights.gamma_pen * f64::from(u8::from(penalty));
    RewardBreakdown {
        delta_d,
        success,
        penalty,
        total,
    }
}

/// Shortest-path distance from the agent to adjacency of the nearest target
/// instance; zero while the target is held. Multi-cell targets measure
/// adjacency of any footprint cell.
pub fn distance_to_target(state: &SceneState) -> Result<u32, RewardError> {
    let held_target = state
        .agent
        .holding
        .and_then(|id| state.objects.iter().find(|o| o.instance_id == id))
        .is_some_and(|o| o.class == state.target_class);
    if held_target {
        return Ok(0);
    }
    let goal_cells: Vec<_> = state
        .objects
        .iter()
        .filter(|o| o.class == state.target_class && !o.held)
        .flat_map(|o| o.footprint.iter().copied())
        .collect();
    if goal_cells.is_empty() {
        return Err(RewardError::UnreachableTarget);
    }
    let field = scene::distance_field_to_adjacency(&state.map, &goal_cells);
    let idx = state.agent.cell.y as usize * state.map.width() + state.agent.cell.x as usize;
    field[idx].ok_or(RewardError::UnreachableTarget)
}
