//! Policy/value network with exact analytic gradients.
//!
//! A stack of valid (unpadded) convolutions with rectified-linear
//! activations feeds a shared fully connected layer; the flattened conv
//! output is concatenated with the target context one-hot before the shared
//! layer. Two linear heads produce action logits (softmax) and the state
//! value. Everything is `f64` and hand-written, so gradients can be checked
//! against central finite differences to tight tolerances.

mod backward;
mod checkpoint;

pub use backward::{backward, BatchStats, LossSpec, Minibatch, Sample};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, OptimizerMoments,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};

use crate::perception::FeatureTensor;
use crate::scene::ACTION_COUNT;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("input shape mismatch: expected {expected_channels}x{expected_window}x{expected_window}, got {got_channels}x{got_window}x{got_window}")]
    ShapeMismatch {
        expected_channels: usize,
        expected_window: usize,
        got_channels: usize,
        got_window: usize,
    },
    #[error("non-finite value produced in {layer}")]
    NonFinite { layer: &'static str },
}

/// One convolution layer: `out_channels` filters of `kernel x kernel`
/// applied with the given stride and no padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Network architecture. Shapes must chain exactly: each convolution
/// requires `(size - kernel)` divisible by `stride`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub window: usize,
    pub conv_layers: Vec<ConvSpec>,
    pub hidden_units: usize,
    pub context_units: usize,
    pub action_count: usize,
}

impl NetworkSpec {
    /// Default stack: two 3x3 stride-1 convolutions (16 then 32 channels)
    /// and a 128-unit shared layer.
    pub fn default_for(input_channels: usize, window: usize, context_units: usize) -> Self {
        NetworkSpec {
            input_channels,
            window,
            conv_layers: vec![
                ConvSpec { out_channels: 16, kernel: 3, stride: 1 },
                ConvSpec { out_channels: 32, kernel: 3, stride: 1 },
            ],
            hidden_units: 128,
            context_units,
            action_count: ACTION_COUNT,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.input_channels == 0 {
            return Err(PolicyError::InvalidSpec("input_channels must be positive".into()));
        }
        if self.window == 0 {
            return Err(PolicyError::InvalidSpec("window must be positive".into()));
        }
        if self.hidden_units == 0 {
            return Err(PolicyError::InvalidSpec("hidden_units must be positive".into()));
        }
        if self.action_count != ACTION_COUNT {
            return Err(PolicyError::InvalidSpec(format!(
                "action_count must be {ACTION_COUNT}, got {}",
                self.action_count
            )));
        }
        let mut size = self.window;
        for (i, conv) in self.conv_layers.iter().enumerate() {
            if conv.out_channels == 0 || conv.kernel == 0 || conv.stride == 0 {
                return Err(PolicyError::InvalidSpec(format!(
                    "conv layer {i} has zero-sized field"
                )));
            }
            if conv.kernel > size || (size - conv.kernel) % conv.stride != 0 {
                return Err(PolicyError::InvalidSpec(format!(
                    "conv layer {i} (kernel {} stride {}) does not tile input size {size}",
                    conv.kernel, conv.stride
                )));
            }
            size = (size - conv.kernel) / conv.stride + 1;
        }
        Ok(())
    }

    /// Spatial size after each conv layer, starting with the input window.
    pub fn spatial_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.window];
        let mut size = self.window;
        for conv in &self.conv_layers {
            size = (size - conv.kernel) / conv.stride + 1;
            sizes.push(size);
        }
        sizes
    }

    /// Channel count after each conv layer, starting with the input.
    pub fn channel_sizes(&self) -> Vec<usize> {
        let mut channels = vec![self.input_channels];
        channels.extend(self.conv_layers.iter().map(|c| c.out_channels));
        channels
    }

    /// Flattened size of the final conv output.
    pub fn flat_size(&self) -> usize {
        let sizes = self.spatial_sizes();
        let channels = self.channel_sizes();
        channels[channels.len() - 1] * sizes[sizes.len() - 1] * sizes[sizes.len() - 1]
    }

    /// Total parameter count: conv weights/biases, shared layer, two heads.
    pub fn parameter_count(&self) -> usize {
        self.layout().total
    }

    pub(crate) fn layout(&self) -> ParamLayout {
        let mut offset = 0;
        let channels = self.channel_sizes();
        let mut conv = Vec::with_capacity(self.conv_layers.len());
        for (i, spec) in self.conv_layers.iter().enumerate() {
            let weights = spec.out_channels * channels[i] * spec.kernel * spec.kernel;
            conv.push(LayerOffsets {
                weights: offset,
                biases: offset + weights,
            });
            offset += weights + spec.out_channels;
        }
        let hidden_in = self.flat_size() + self.context_units;
        let hidden = LayerOffsets {
            weights: offset,
            biases: offset + self.hidden_units * hidden_in,
        };
        offset += self.hidden_units * hidden_in + self.hidden_units;
        let policy = LayerOffsets {
            weights: offset,
            biases: offset + self.action_count * self.hidden_units,
        };
        offset += self.action_count * self.hidden_units + self.action_count;
        let value = LayerOffsets {
            weights: offset,
            biases: offset + self.hidden_units,
        };
        offset += self.hidden_units + 1;
        ParamLayout {
            conv,
            hidden,
            policy,
            value,
            total: offset,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerOffsets {
    pub weights: usize,
    pub biases: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct ParamLayout {
    pub conv: Vec<LayerOffsets>,
    pub hidden: LayerOffsets,
    pub policy: LayerOffsets,
    pub value: LayerOffsets,
    pub total: usize,
}

/// All network weights as one flat vector; layer views are derived from the
/// spec's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub spec: NetworkSpec,
    pub data: Vec<f64>,
}

impl PolicyParams {
    pub fn parameter_count(&self) -> usize {
        self.data.len()
    }
}

/// Fan-in-scaled uniform initialization, zero biases, deterministic in the
/// seed.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> Result<PolicyParams, PolicyError> {
    spec.validate()?;
    let layout = spec.layout();
    let mut data = vec![0.0; layout.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = spec.channel_sizes();
    for (i, conv) in spec.conv_layers.iter().enumerate() {
        let fan_in = channels[i] * conv.kernel * conv.kernel;
        let count = conv.out_channels * fan_in;
        fill_uniform(&mut data[layout.conv[i].weights..layout.conv[i].weights + count], fan_in, &mut rng);
    }
    let hidden_in = spec.flat_size() + spec.context_units;
    fill_uniform(
        &mut data[layout.hidden.weights..layout.hidden.weights + spec.hidden_units * hidden_in],
        hidden_in,
        &mut rng,
    );
    fill_uniform(
        &mut data[layout.policy.weights..layout.policy.weights + spec.action_count * spec.hidden_units],
        spec.hidden_units,
        &mut rng,
    );
    fill_uniform(
        &mut data[layout.value.weights..layout.value.weights + spec.hidden_units],
        spec.hidden_units,
        &mut rng,
    );
    Ok(PolicyParams {
        spec: spec.clone(),
        data,
    })
}

fn fill_uniform<R: Rng>(slice: &mut [f64], fan_in: usize, rng: &mut R) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for w in slice {
        *w = rng.gen_range(-bound..bound);
    }
}

/// Forward outputs: softmax probabilities, raw logits, value estimate and
/// the policy entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub action_probs: [f64; ACTION_COUNT],
    pub logits: [f64; ACTION_COUNT],
    pub value: f64,
    pub entropy: f64,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct ForwardCache {
    /// Post-activation conv outputs; index 0 is the input itself.
    pub conv_acts: Vec<Vec<f64>>,
    /// Flattened final conv output concatenated with the context.
    pub concat: Vec<f64>,
    pub hidden_post: Vec<f64>,
    pub probs: [f64; ACTION_COUNT],
    pub logits: [f64; ACTION_COUNT],
    pub value: f64,
    pub entropy: f64,
}

/// Evaluates the network.
pub fn forward(
    params: &PolicyParams,
    features: &FeatureTensor,
    context: &[f64],
) -> Result<PolicyOutput, PolicyError> {
    let cache = forward_cached(params, features, context)?;
    Ok(PolicyOutput {
        action_probs: cache.probs,
        logits: cache.logits,
        value: cache.value,
        entropy: cache.entropy,
    })
}

pub(crate) fn forward_cached(
    params: &PolicyParams,
    features: &FeatureTensor,
    context: &[f64],
) -> Result<ForwardCache, PolicyError> {
    let spec = &params.spec;
    if features.channels() != spec.input_channels
        || features.window() != spec.window
        || context.len() != spec.context_units
    {
        return Err(PolicyError::ShapeMismatch {
            expected_channels: spec.input_channels,
            expected_window: spec.window,
            got_channels: features.channels(),
            got_window: features.window(),
        });
    }
    let layout = spec.layout();
    let sizes = spec.spatial_sizes();
    let channel_counts = spec.channel_sizes();

    let mut conv_acts: Vec<Vec<f64>> = Vec::with_capacity(spec.conv_layers.len() + 1);
    conv_acts.push(features.as_slice().to_vec());
    for (i, conv) in spec.conv_layers.iter().enumerate() {
        let out = conv_forward(
            &conv_acts[i],
            channel_counts[i],
            sizes[i],
            conv,
            &params.data[layout.conv[i].weights..],
            &params.data[layout.conv[i].biases..layout.conv[i].biases + conv.out_channels],
            sizes[i + 1],
        );
        conv_acts.push(out);
    }

    let flat = conv_acts.last().expect("at least the input");
    let mut concat = Vec::with_capacity(flat.len() + context.len());
    concat.extend_from_slice(flat);
    concat.extend_from_slice(context);

    let hidden_in = concat.len();
    let mut hidden_post = vec![0.0; spec.hidden_units];
    for (h, out) in hidden_post.iter_mut().enumerate() {
        let row = &params.data
            [layout.hidden.weights + h * hidden_in..layout.hidden.weights + (h + 1) * hidden_in];
        let mut acc = params.data[layout.hidden.biases + h];
        for (w, x) in row.iter().zip(concat.iter()) {
            acc += w * x;
        }
        *out = acc.max(0.0);
    }

    let mut logits = [0.0; ACTION_COUNT];
    for (a, logit) in logits.iter_mut().enumerate() {
        let row = &params.data[layout.policy.weights + a * spec.hidden_units
            ..layout.policy.weights + (a + 1) * spec.hidden_units];
        let mut acc = params.data[layout.policy.biases + a];
        for (w, x) in row.iter().zip(hidden_post.iter()) {
            acc += w * x;
        }
        *logit = acc;
    }
    let mut value = params.data[layout.value.biases];
    {
        let row = &params.data[layout.value.weights..layout.value.weights + spec.hidden_units];
        for (w, x) in row.iter().zip(hidden_post.iter()) {
            value += w * x;
        }
    }

    if logits.iter().any(|l| !l.is_finite()) {
        return Err(PolicyError::NonFinite { layer: "policy head" });
    }
    if !value.is_finite() {
        return Err(PolicyError::NonFinite { layer: "value head" });
    }

    let probs = softmax(&logits);
    let entropy = -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>();

    Ok(ForwardCache {
        conv_acts,
        concat,
        hidden_post,
        probs,
        logits,
        value,
        entropy,
    })
}

fn softmax(logits: &[f64; ACTION_COUNT]) -> [f64; ACTION_COUNT] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; ACTION_COUNT];
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits.iter()) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    input: &[f64],
    in_channels: usize,
    in_size: usize,
    conv: &ConvSpec,
    weights: &[f64],
    biases: &[f64],
    out_size: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; conv.out_channels * out_size * out_size];
    let k = conv.kernel;
    let stride = conv.stride;
    for oc in 0..conv.out_channels {
        let w_base = oc * in_channels * k * k;
        for or in 0..out_size {
            for ocl in 0..out_size {
                let mut acc = biases[oc];
                for ic in 0..in_channels {
                    let w_off = w_base + ic * k * k;
                    let in_base = ic * in_size * in_size;
                    for kr in 0..k {
                        let in_row = in_base + (or * stride + kr) * in_size + ocl * stride;
                        let w_row = w_off + kr * k;
                        for kc in 0..k {
                            acc += weights[w_row + kc] * input[in_row + kc];
                        }
                    }
                }
                out[(oc * out_size + or) * out_size + ocl] = acc.max(0.0);
            }
        }
    }
    out
}

/// Inverse-CDF sampling over the fixed action order. Returns the action
/// index and its log-probability.
pub fn sample_action<R: Rng>(output: &PolicyOutput, rng: &mut R) -> (usize, f64) {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut chosen = ACTION_COUNT - 1;
    for (i, p) in output.action_probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            chosen = i;
            break;
        }
    }
    (chosen, output.action_probs[chosen].ln())
}

/// Deterministic argmax action; ties break toward the lowest index.
pub fn greedy_action(output: &PolicyOutput) -> usize {
    let mut best = 0;
    for (i, p) in output.action_probs.iter().enumerate() {
        if *p > output.action_probs[best] {
            best = i;
        }
    }
    best
}
