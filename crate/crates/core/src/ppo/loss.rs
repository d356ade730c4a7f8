//! The composite surrogate loss on pre-computed arrays.

use super::PpoError;
use crate::policy::LossSpec;

/// Loss terms over one batch, plus the clip/KL diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// `-mean(min(ratio * A, clip(ratio) * A))`
    pub policy_term: f64,
    /// `value_coef * mean((V - R)^2)`
    pub value_term: f64,
    /// `-entropy_coef * mean(H)`
    pub entropy_term: f64,
    pub total: f64,
    /// Fraction of samples where the clipped branch is strictly selected.
    pub clip_fraction: f64,
    /// `mean(old_log_prob - new_log_prob)`
    pub approx_kl: f64,
}

/// Evaluates the composite loss element-by-element. All arrays must have
/// the same non-zero length.
pub fn ppo_loss(
    new_log_probs: &[f64],
    old_log_probs: &[f64],
    advantages: &[f64],
    value_preds: &[f64],
    return_targets: &[f64],
    entropies: &[f64],
    cfg: &LossSpec,
) -> Result<LossBreakdown, PpoError> {
    let n = new_log_probs.len();
    assert!(n > 0, "loss over an empty batch");
    assert!(
        [old_log_probs, advantages, value_preds, return_targets, entropies]
            .iter()
            .all(|a| a.len() == n),
        "loss arrays must be aligned"
    );
    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;
    let mut clipped_count = 0usize;
    let mut kl_sum = 0.0;
    for i in 0..n {
        let ratio = (new_log_probs[i] - old_log_probs[i]).exp();
        if !ratio.is_finite() {
            return Err(PpoError::NonFiniteRatio);
        }
        let unclipped = ratio * advantages[i];
        let clipped =
            ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * advantages[i];
        policy_sum += -unclipped.min(clipped);
        if clipped < unclipped {
            clipped_count += 1;
        }
        let err = value_preds[i] - return_targets[i];
        value_sum += err * err;
        entropy_sum += entropies[i];
        kl_sum += old_log_probs[i] - new_log_probs[i];
    }
    let inv = 1.0 / n as f64;
    let policy_term = policy_sum * inv;
    let value_term = cfg.value_coef * value_sum * inv;
    let entropy_term = -cfg.entropy_coef * entropy_sum * inv;
    Ok(LossBreakdown {
        policy_term,
        value_term,
        entropy_term,
        total: policy_term + value_term + entropy_term,
        clip_fraction: clipped_count as f64 * inv,
        approx_kl: kl_sum * inv,
    })
}
