//! Simulated detection/segmentation pipeline and observation encoders.
//!
//! The detector and segmenter stand in for fixed pre-trained vision models:
//! they see the ground-truth visible objects and corrupt them through a few
//! noise knobs (missed detections, wrong class labels, mask erosion,
//! spurious detections). Their outputs — boxes, class labels and masks over
//! the egocentric window — are painted into feature planes for the policy.
//!
//! Two encoders share the geometric base planes:
//!
//! * baseline: occupancy, known/unknown, color appearance, pitch;
//! * enhanced: the same planes plus per-class mask planes, a mask-union
//!   plane and a target-match plane.
//!
//! The egocentric window is rotation-aligned: the agent sits at the center
//! and its heading points toward row 0.

use crate::scene::{
    self, Cell, CellKind, ObjectClass, SceneState, NUM_CLASSES, NUM_COLORS,
};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("feature tensor shape mismatch: expected {expected} channels of {window}x{window}, got {got}")]
    ShapeMismatch {
        expected: usize,
        window: usize,
        got: usize,
    },
}

/// Noise and geometry knobs for the simulated pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionConfig {
    /// Egocentric window radius; the window is `2r + 1` cells square.
    pub window_radius: usize,
    /// Probability that a visible object is detected at all.
    pub p_detect: f64,
    /// Probability that a detection reports a wrong class label.
    pub p_misclass: f64,
    /// Per-cell probability that a mask cell is eroded away.
    pub p_mask_dropout: f64,
    /// Expected number of spurious single-cell detections per frame.
    pub p_false_positive: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            window_radius: 5,
            p_detect: 0.95,
            p_misclass: 0.05,
            p_mask_dropout: 0.05,
            p_false_positive: 0.05,
        }
    }
}

impl PerceptionConfig {
    /// All noise switched off: detections and masks reproduce the ground
    /// truth exactly.
    pub fn noiseless() -> Self {
        PerceptionConfig {
            window_radius: 5,
            p_detect: 1.0,
            p_misclass: 0.0,
            p_mask_dropout: 0.0,
            p_false_positive: 0.0,
        }
    }

    pub fn window(&self) -> usize {
        2 * self.window_radius + 1
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [
            ("p_detect", self.p_detect),
            ("p_misclass", self.p_misclass),
            ("p_mask_dropout", self.p_mask_dropout),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.p_false_positive < 0.0 || !self.p_false_positive.is_finite() {
            return Err(format!(
                "p_false_positive must be a finite non-negative rate, got {}",
                self.p_false_positive
            ));
        }
        if self.window_radius == 0 {
            return Err("window_radius must be at least 1".into());
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in egocentric window coordinates, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EgoRect {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

impl EgoRect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.min_row && row <= self.max_row && col >= self.min_col && col <= self.max_col
    }
}

/// One simulated detector output: a box and a class label. The ground-truth
/// instance id is internal bookkeeping for the segmenter and the tests; it
/// is never painted into the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bounds: EgoRect,
    pub class_label: ObjectClass,
    pub confidence: f64,
    pub instance: Option<u32>,
}

/// Mask cells for one detection, always contained in its box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMask {
    pub detection_index: usize,
    pub cells: Vec<(usize, usize)>,
}

/// Stack of egocentric feature planes, `channels x window x window`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    channels: usize,
    window: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(channels: usize, window: usize) -> Self {
        FeatureTensor {
            channels,
            window,
            data: vec![0.0; channels * window * window],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[(channel * self.window + row) * self.window + col]
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f64) {
        self.data[(channel * self.window + row) * self.window + col] = value;
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        let plane = self.window * self.window;
        &self.data[channel * plane..(channel + 1) * plane]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Channel indices for the enhanced encoding. The baseline encoding keeps
/// channels 0..3 and the pitch plane at index 3.
pub mod channels {
    use super::NUM_CLASSES;

    pub const OCCUPANCY: usize = 0;
    pub const KNOWN: usize = 1;
    pub const APPEARANCE: usize = 2;
    pub const CLASS_BASE: usize = 3;
    pub const MASK_UNION: usize = 3 + NUM_CLASSES;
    pub const TARGET_MATCH: usize = 4 + NUM_CLASSES;
    pub const PITCH: usize = 5 + NUM_CLASSES;

    pub const ENHANCED_COUNT: usize = 6 + NUM_CLASSES;
    pub const BASELINE_COUNT: usize = 4;
    pub const BASELINE_PITCH: usize = 3;
}

/// Window coordinates of a world cell, if it falls inside the window.
/// Row 0 is straight ahead of the agent; the agent sits at the center.
pub fn ego_coords(state: &SceneState, radius: usize, world: Cell) -> Option<(usize, usize)> {
    let (forward, lateral) = scene::heading_frame_offsets(&state.agent, world);
    let r = radius as i32;
    let row = r - forward;
    let col = r + lateral;
    let w = 2 * r + 1;
    if row >= 0 && row < w && col >= 0 && col < w {
        Some((row as usize, col as usize))
    } else {
        None
    }
}

/// World cell shown at the given window coordinates.
pub fn world_at(state: &SceneState, radius: usize, row: usize, col: usize) -> Cell {
    let r = radius as i32;
    let forward = r - row as i32;
    let lateral = col as i32 - r;
    let (fx, fy) = state.agent.heading.delta();
    let (rx, ry) = state.agent.heading.right_delta();
    state
        .agent
        .cell
        .offset(forward * fx + lateral * rx, forward * fy + lateral * ry)
}

/// The part of an object footprint visible in the window.
fn ego_footprint(state: &SceneState, radius: usize, footprint: &[Cell]) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = footprint
        .iter()
        .filter_map(|&c| ego_coords(state, radius, c))
        .collect();
    cells.sort_unstable();
    cells
}

fn bounding_rect(cells: &[(usize, usize)]) -> EgoRect {
    let min_row = cells.iter().map(|c| c.0).min().expect("non-empty");
    let max_row = cells.iter().map(|c| c.0).max().expect("non-empty");
    let min_col = cells.iter().map(|c| c.1).min().expect("non-empty");
    let max_col = cells.iter().map(|c| c.1).max().expect("non-empty");
    EgoRect {
        min_row,
        min_col,
        max_row,
        max_col,
    }
}

/// Runs the simulated detector over the current view.
///
/// Every visible object is independently detected with probability
/// `p_detect`; detected objects report their true class unless a misclass
/// draw replaces it with a uniformly random wrong class. Boxes are the tight
/// bounding rectangle of the footprint portion inside the window. Spurious
/// single-cell detections are added at a Poisson(`p_false_positive`) rate.
/// Output is ordered by decreasing confidence, ties by instance id.
pub fn detect<R: Rng>(
    state: &SceneState,
    config: &PerceptionConfig,
    rng: &mut R,
) -> Vec<Detection> {
    let mut detections = Vec::new();
    for visible in scene::visible_objects(state) {
        let obj = &state.objects[visible.object_index];
        if rng.gen::<f64>() >= config.p_detect {
            continue;
        }
        let class_label = if rng.gen::<f64>() < config.p_misclass {
            wrong_class(obj.class, rng)
        } else {
            obj.class
        };
        let confidence = 1.0 - rng.gen::<f64>();
        let cells = ego_footprint(state, config.window_radius, &visible.footprint);
        if cells.is_empty() {
            continue;
        }
        detections.push(Detection {
            bounds: bounding_rect(&cells),
            class_label,
            confidence,
            instance: Some(obj.instance_id),
        });
    }
    if config.p_false_positive > 0.0 {
        let poisson = Poisson::new(config.p_false_positive).expect("validated rate");
        let count = poisson.sample(rng) as u64;
        let w = config.window();
        for _ in 0..count {
            let row = rng.gen_range(0..w);
            let col = rng.gen_range(0..w);
            let class_label = ObjectClass::ALL[rng.gen_range(0..NUM_CLASSES)];
            let confidence = 1.0 - rng.gen::<f64>();
            detections.push(Detection {
                bounds: EgoRect {
                    min_row: row,
                    min_col: col,
                    max_row: row,
                    max_col: col,
                },
                class_label,
                confidence,
                instance: None,
            });
        }
    }
    detections.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .expect("confidences are finite")
            .then_with(|| match (a.instance, b.instance) {
                (Some(x), Some(y)) => x.cmp(&y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
    });
    detections
}

fn wrong_class<R: Rng>(true_class: ObjectClass, rng: &mut R) -> ObjectClass {
    let true_id = true_class.id() as usize;
    let pick = rng.gen_range(0..NUM_CLASSES - 1);
    let id = if pick >= true_id { pick + 1 } else { pick };
    ObjectClass::ALL[id]
}

/// Produces one mask per detection, prompted by its box. Real detections
/// get their visible footprint cells with independent per-cell erosion;
/// spurious detections get their single box cell.
pub fn segment<R: Rng>(
    detections: &[Detection],
    state: &SceneState,
    config: &PerceptionConfig,
    rng: &mut R,
) -> Vec<SegmentMask> {
    detections
        .iter()
        .enumerate()
        .map(|(index, det)| {
            let cells = match det.instance {
                Some(instance) => {
                    let obj = state
                        .objects
                        .iter()
                        .find(|o| o.instance_id == instance)
                        .expect("detection references a scene object");
                    ego_footprint(state, config.window_radius, &obj.footprint)
                        .into_iter()
                        .filter(|_| rng.gen::<f64>() >= config.p_mask_dropout)
                        .collect()
                }
                None => vec![(det.bounds.min_row, det.bounds.min_col)],
            };
            SegmentMask {
                detection_index: index,
                cells,
            }
        })
        .collect()
}

/// Paints the shared geometric planes: occupancy, known/unknown and color
/// appearance (band-matched object cells on known cells).
fn paint_base_planes(tensor: &mut FeatureTensor, state: &SceneState, radius: usize) {
    let w = 2 * radius + 1;
    let band = state.agent.pitch.band();
    for row in 0..w {
        for col in 0..w {
            let world = world_at(state, radius, row, col);
            if !scene::cell_known(state, world) {
                continue;
            }
            tensor.set(channels::KNOWN, row, col, 1.0);
            if state.map.kind(world) == CellKind::Obstacle {
                tensor.set(channels::OCCUPANCY, row, col, 1.0);
            }
            if let Some(idx) = state.object_at(world) {
                let obj = &state.objects[idx];
                if obj.height_band == band {
                    let shade = (obj.color_id() as f64 + 1.0) / NUM_COLORS as f64;
                    tensor.set(channels::APPEARANCE, row, col, shade);
                }
            }
        }
    }
}

/// Builds the enhanced observation: base planes plus detection-driven class,
/// mask-union and target-match planes, and the broadcast pitch plane.
pub fn encode_enhanced(
    detections: &[Detection],
    masks: &[SegmentMask],
    target_class: ObjectClass,
    state: &SceneState,
    config: &PerceptionConfig,
) -> Result<FeatureTensor, PerceptionError> {
    let w = config.window();
    let mut tensor = FeatureTensor::zeros(channels::ENHANCED_COUNT, w);
    paint_base_planes(&mut tensor, state, config.window_radius);
    for mask in masks {
        let det = detections.get(mask.detection_index).ok_or(
            PerceptionError::ShapeMismatch {
                expected: detections.len(),
                window: w,
                got: mask.detection_index,
            },
        )?;
        let class_plane = channels::CLASS_BASE + det.class_label.id() as usize;
        for &(row, col) in &mask.cells {
            tensor.set(class_plane, row, col, 1.0);
            tensor.set(channels::MASK_UNION, row, col, 1.0);
            if det.class_label == target_class {
                tensor.set(channels::TARGET_MATCH, row, col, 1.0);
            }
        }
    }
    let pitch = state.agent.pitch.normalized();
    for row in 0..w {
        for col in 0..w {
            tensor.set(channels::PITCH, row, col, pitch);
        }
    }
    Ok(tensor)
}

/// Builds the baseline observation: the geometric planes only.
pub fn encode_baseline(state: &SceneState, config: &PerceptionConfig) -> FeatureTensor {
    let w = config.window();
    let mut tensor = FeatureTensor::zeros(channels::BASELINE_COUNT, w);
    paint_base_planes(&mut tensor, state, config.window_radius);
    let pitch = state.agent.pitch.normalized();
    for row in 0..w {
        for col in 0..w {
            tensor.set(channels::BASELINE_PITCH, row, col, pitch);
        }
    }
    tensor
}

/// One-hot target context vector appended to the policy input for both
/// observation modes.
pub fn target_context(target_class: ObjectClass) -> Vec<f64> {
    let mut context = vec![0.0; NUM_CLASSES];
    context[target_class.id() as usize] = 1.0;
    context
}

/// Human-readable channel map for the given channel count (enhanced or
/// baseline schema).
#[rustfmt::skip]
pub fn observation_schema(enhanced: bool) -> String {
    let mut lines = Vec::new();
    if enhanced {
        lines.push(format!("channels: {} (enhanced)", channels::ENHANCED_COUNT));
        lines.push(format!("{:>3}  floor/obstacle occupancy (1 = obstacle)", channels::OCCUPANCY));
        lines.push(format!("{:>3}  known/unknown (1 = inside field of view)", channels::KNOWN));
        lines.push(format!("{:>3}  color appearance ((color_id + 1) / {NUM_COLORS})", channels::APPEARANCE));
        for class in ObjectClass::ALL {
            lines.push(format!(
                "{:>3}  class mask: {}",
                channels::CLASS_BASE + class.id() as usize,
                class.name()
            ));
        }
        lines.push(format!("{:>3}  union of segmentation masks", channels::MASK_UNION));
        lines.push(format!("{:>3}  target-match mask", channels::TARGET_MATCH));
        lines.push(format!("{:>3}  pitch broadcast (0, 0.5, 1)", channels::PITCH));
    } else {
        lines.push(format!("channels: {} (baseline)", channels::BASELINE_COUNT));
        lines.push(format!("{:>3}  floor/obstacle occupancy (1 = obstacle)", channels::OCCUPANCY));
        lines.push(format!("{:>3}  known/unknown (1 = inside field of view)", channels::KNOWN));
        lines.push(format!("{:>3}  color appearance ((color_id + 1) / {NUM_COLORS})", channels::APPEARANCE));
        lines.push(format!("{:>3}  pitch broadcast (0, 0.5, 1)", channels::BASELINE_PITCH));
    }
    lines.join("\n")
}
