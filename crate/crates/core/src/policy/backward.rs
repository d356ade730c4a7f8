//! Analytic gradient of the composite clipped-surrogate loss.
//!
//! For each sample the loss is
//!
//! ```text
//! -min(ratio * A, clamp(ratio, 1-eps, 1+eps) * A)
//!   + value_coef * (V - R)^2
//!   - entropy_coef * H
//! ```
//!
//! averaged over the minibatch. The policy term's gradient flows only while
//! the unclipped branch is selected; a binding clip stops it exactly.

use super::{forward_cached, PolicyError, PolicyParams};
use crate::perception::FeatureTensor;
use crate::scene::ACTION_COUNT;

/// Loss coefficients carried into the backward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// One training sample. Features and context are borrowed from the rollout
/// storage.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub features: &'a FeatureTensor,
    pub context: &'a [f64],
    pub action: usize,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub return_target: f64,
}

pub type Minibatch<'a> = [Sample<'a>];

/// Diagnostics aggregated over one minibatch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Exact gradient of the minibatch-mean composite loss with respect to every
/// parameter, plus the batch diagnostics.
pub fn backward(
    params: &PolicyParams,
    batch: &Minibatch<'_>,
    loss: &LossSpec,
) -> Result<(Vec<f64>, BatchStats), PolicyError> {
    assert!(!batch.is_empty(), "minibatch must be non-empty");
    let spec = &params.spec;
    let layout = spec.layout();
    let mut grad = vec![0.0; layout.total];
    let mut stats = BatchStats::default();

    for sample in batch {
        let cache = forward_cached(params, sample.features, sample.context)?;
        let new_log_prob = cache.probs[sample.action].ln();
        let ratio = (new_log_prob - sample.old_log_prob).exp();
        if !ratio.is_finite() {
            return Err(PolicyError::NonFinite {
                layer: "probability ratio",
            });
        }
        let advantage = sample.advantage;
        let unclipped = ratio * advantage;
        let clipped = ratio.clamp(1.0 - loss.clip_epsilon, 1.0 + loss.clip_epsilon) * advantage;
        let use_unclipped = unclipped <= clipped;

        stats.policy_loss += -unclipped.min(clipped);
        let value_err = cache.value - sample.return_target;
        stats.value_loss += value_err * value_err;
        stats.entropy += cache.entropy;
        if clipped < unclipped {
            stats.clip_fraction += 1.0;
        }
        stats.approx_kl += sample.old_log_prob - new_log_prob;

        // Gradient w.r.t. the logits.
        let mut d_logits = [0.0; ACTION_COUNT];
        if use_unclipped {
            let scale = -advantage * ratio;
            for (j, d) in d_logits.iter_mut().enumerate() {
                let indicator = if j == sample.action { 1.0 } else { 0.0 };
                *d += scale * (indicator - cache.probs[j]);
            }
        }
        if loss.entropy_coef != 0.0 {
            for (j, d) in d_logits.iter_mut().enumerate() {
                let p = cache.probs[j];
                if p > 0.0 {
                    *d += loss.entropy_coef * p * (p.ln() + cache.entropy);
                }
            }
        }
        let d_value = 2.0 * loss.value_coef * value_err;

        accumulate_sample_gradient(params, &cache, &d_logits, d_value, &mut grad);
    }

    let inv = 1.0 / batch.len() as f64;
    for g in &mut grad {
        *g *= inv;
    }
    stats.policy_loss *= inv;
    stats.value_loss *= inv;
    stats.entropy *= inv;
    stats.clip_fraction *= inv;
    stats.approx_kl *= inv;
    Ok((grad, stats))
}

fn accumulate_sample_gradient(
    params: &PolicyParams,
    cache: &super::ForwardCache,
    d_logits: &[f64; ACTION_COUNT],
    d_value: f64,
    grad: &mut [f64],
) {
    let spec = &params.spec;
    let layout = spec.layout();
    let hidden_units = spec.hidden_units;
    let hidden_in = cache.concat.len();

    // Heads: accumulate weight/bias gradients and the hidden gradient.
    let mut d_hidden = vec![0.0; hidden_units];
    for (a, &dl) in d_logits.iter().enumerate() {
        grad[layout.policy.biases + a] += dl;
        let w_row = layout.policy.weights + a * hidden_units;
        let grad_row = &mut grad[w_row..w_row + hidden_units];
        let weight_row = &params.data[w_row..w_row + hidden_units];
        for h in 0..hidden_units {
            grad_row[h] += dl * cache.hidden_post[h];
            d_hidden[h] += weight_row[h] * dl;
        }
    }
    grad[layout.value.biases] += d_value;
    {
        let w_row = layout.value.weights;
        let grad_row = &mut grad[w_row..w_row + hidden_units];
        let weight_row = &params.data[w_row..w_row + hidden_units];
        for h in 0..hidden_units {
            grad_row[h] += d_value * cache.hidden_post[h];
            d_hidden[h] += weight_row[h] * d_value;
        }
    }

    // Shared hidden layer (ReLU).
    let mut d_concat = vec![0.0; hidden_in];
    for h in 0..hidden_units {
        if cache.hidden_post[h] <= 0.0 {
            continue;
        }
        let d_pre = d_hidden[h];
        grad[layout.hidden.biases + h] += d_pre;
        let w_row = layout.hidden.weights + h * hidden_in;
        let grad_row = &mut grad[w_row..w_row + hidden_in];
        let weight_row = &params.data[w_row..w_row + hidden_in];
        for j in 0..hidden_in {
            grad_row[j] += d_pre * cache.concat[j];
            d_concat[j] += weight_row[j] * d_pre;
        }
    }

    // Context entries carry no parameters; only the flattened conv part
    // propagates further.
    let flat_size = spec.flat_size();
    let mut d_out = d_concat[..flat_size].to_vec();

    let sizes = spec.spatial_sizes();
    let channel_counts = spec.channel_sizes();
    for i in (0..spec.conv_layers.len()).rev() {
        let conv = &spec.conv_layers[i];
        let in_size = sizes[i];
        let out_size = sizes[i + 1];
        let in_channels = channel_counts[i];
        let input = &cache.conv_acts[i];
        let output = &cache.conv_acts[i + 1];
        let mut d_in = vec![0.0; input.len()];
        let k = conv.kernel;
        let stride = conv.stride;
        for oc in 0..conv.out_channels {
            let w_base = layout.conv[i].weights + oc * in_channels * k * k;
            for or in 0..out_size {
                for ocl in 0..out_size {
                    let out_idx = (oc * out_size + or) * out_size + ocl;
                    if output[out_idx] <= 0.0 {
                        continue;
                    }
                    let d_pre = d_out[out_idx];
                    if d_pre == 0.0 {
                        continue;
                    }
                    grad[layout.conv[i].biases + oc] += d_pre;
                    for ic in 0..in_channels {
                        let w_off = w_base + ic * k * k;
                        let in_base = ic * in_size * in_size;
                        for kr in 0..k {
                            let in_row = in_base + (or * stride + kr) * in_size + ocl * stride;
                            let w_row = w_off + kr * k;
                            for kc in 0..k {
                                grad[w_row + kc] += d_pre * input[in_row + kc];
                                d_in[in_row + kc] += params.data[w_row + kc] * d_pre;
                            }
                        }
                    }
                }
            }
        }
        d_out = d_in;
    }
}
