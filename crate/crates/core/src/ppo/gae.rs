//! Exponentially-weighted advantage estimation.

/// Backward recursion over one trajectory:
///
/// ```text
/// delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
/// A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
/// ```
///
/// `bootstrap` supplies `V_T` for a truncated final step; it is masked away
/// whenever the final step terminated. Returns `(advantages, returns)` with
/// `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma_discount: f64,
    gae_lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);

    let mut advantages = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let non_terminal = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma_discount * next_value * non_terminal - values[t];
        carry = delta + gamma_discount * gae_lambda * non_terminal * carry;
        advantages[t] = carry;
    }
    let returns = advantages
        .iter()
        .zip(values.iter())
        .map(|(a, v)| a + v)
        .collect();
    (advantages, returns)
}
