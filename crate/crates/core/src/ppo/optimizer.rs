//! Adaptive-moment optimizer with bias correction.

use super::PpoError;

pub use crate::policy::OptimizerMoments;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

impl OptimizerMoments {
    pub fn zeros(count: usize) -> Self {
        OptimizerMoments {
            step: 0,
            first: vec![0.0; count],
            second: vec![0.0; count],
        }
    }
}

/// One bias-corrected moment update. Refuses the step (leaving parameters
/// and moments untouched) if any gradient entry is non-finite.
pub fn optimizer_step(
    params: &mut [f64],
    gradient: &[f64],
    state: &mut OptimizerMoments,
    learning_rate: f64,
) -> Result<(), PpoError> {
    assert_eq!(params.len(), gradient.len(), "gradient length mismatch");
    assert_eq!(params.len(), state.first.len(), "moment length mismatch");
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(PpoError::NonFiniteGradient);
    }
    state.step += 1;
    let t = state.step as i32;
    let first_correction = 1.0 - BETA1.powi(t);
    let second_correction = 1.0 - BETA2.powi(t);
    for i in 0..params.len() {
        let g = gradient[i];
        state.first[i] = BETA1 * state.first[i] + (1.0 - BETA1) * g;
        state.second[i] = BETA2 * state.second[i] + (1.0 - BETA2) * g * g;
        let first_hat = state.first[i] / first_correction;
        let second_hat = state.second[i] / second_correction;
        params[i] -= learning_rate * first_hat / (second_hat.sqrt() + EPSILON);
    }
    Ok(())
}
