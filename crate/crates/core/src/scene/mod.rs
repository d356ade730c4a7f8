//! Deterministic gridworld kitchens.
//!
//! A scene is a rectangular grid of floor and obstacle cells with a set of
//! objects placed on floor cells. The agent occupies one floor cell, faces
//! one of four headings and holds one of three pitches. Episodes are
//! target-object fetch tasks: navigate until the target sits in the cell
//! directly ahead at the matching pitch, then pick it up.

mod asset;
mod path;
#[cfg(test)]
mod tests;
mod visibility;

pub use asset::{load_scene, ParsedScene, SceneLibrary};
pub use path::{distance_field_to_adjacency, shortest_path_length};
pub use visibility::{
    cell_known, heading_frame_offsets, in_fov_cone, los_clear, segment_touches_cell,
    visible_objects, VisibleObject, FOV_DEPTH,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of object classes in the fixed class table.
pub const NUM_CLASSES: usize = 8;
/// Number of appearance colors. Smaller than the class count: some class
/// pairs share a color and can only be told apart by class identity.
pub const NUM_COLORS: usize = 6;

/// Errors produced by scene loading and the episode protocol.
#[derive(Debug, Error)]
pub enum SceneError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("floor is not a single connected component ({unreachable} cells unreachable)")]
    DisconnectedFloor { unreachable: usize },
    #[error("object '{letter}' at ({x}, {y}) is on an obstacle cell")]
    ObjectOnObstacle { letter: char, x: i32, y: i32 },
    #[error("duplicate object cell at ({x}, {y})")]
    DuplicateObjectCell { x: i32, y: i32 },
    #[error("unknown scene id {0}")]
    UnknownScene(u8),
    #[error("target class {0:?} not present in scene")]
    TargetClassAbsent(ObjectClass),
    #[error("start pose at ({x}, {y}) is not a free floor cell")]
    InvalidStartPose { x: i32, y: i32 },
    #[error("max_steps must be at least 1")]
    ZeroStepBudget,
    #[error("step called on a terminal state")]
    StepOnTerminal,
}

/// Grid coordinate. `x` grows to the east, `y` grows to the south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Cell::new(self.x + dx, self.y + dy)
    }

    /// The four edge-adjacent neighbors in fixed N, E, S, W order.
    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset(0, -1),
            self.offset(1, 0),
            self.offset(0, 1),
            self.offset(-1, 0),
        ]
    }

    pub fn chebyshev_distance(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Floor,
    Obstacle,
}

/// Rectangular cell map. All border cells are obstacles and the floor forms
/// a single connected component; both are enforced at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
    id: u8,
}

impl GridMap {
    /// Builds a map from row-major cell data, validating the border and
    /// floor-connectivity invariants.
    pub fn from_cells(
        id: u8,
        width: usize,
        height: usize,
        cells: Vec<CellKind>,
    ) -> Result<Self, SceneError> {
        assert_eq!(cells.len(), width * height, "cell data must be rectangular");
        let map = GridMap {
            width,
            height,
            cells,
            id,
        };
        for x in 0..width as i32 {
            for y in [0, height as i32 - 1] {
                if map.kind(Cell::new(x, y)) != CellKind::Obstacle {
                    return Err(SceneError::Parse {
                        line: (y + 1) as usize,
                        col: (x + 1) as usize,
                        msg: "border cell must be an obstacle".into(),
                    });
                }
            }
        }
        for y in 0..height as i32 {
            for x in [0, width as i32 - 1] {
                if map.kind(Cell::new(x, y)) != CellKind::Obstacle {
                    return Err(SceneError::Parse {
                        line: (y + 1) as usize,
                        col: (x + 1) as usize,
                        msg: "border cell must be an obstacle".into(),
                    });
                }
            }
        }
        map.check_floor_connected()?;
        Ok(map)
    }

    fn check_floor_connected(&self) -> Result<(), SceneError> {
        let floors: Vec<Cell> = self.floor_cells().collect();
        let Some(&start) = floors.first() else {
            return Err(SceneError::DisconnectedFloor {
                unreachable: 0,
            });
        };
        let mut seen = vec![false; self.cells.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[self.index(start)] = true;
        queue.push_back(start);
        let mut reached = 1usize;
        while let Some(cell) = queue.pop_front() {
            for next in cell.neighbors4() {
                if self.kind(next) == CellKind::Floor && !seen[self.index(next)] {
                    seen[self.index(next)] = true;
                    reached += 1;
                    queue.push_back(next);
                }
            }
        }
        if reached != floors.len() {
            return Err(SceneError::DisconnectedFloor {
                unreachable: floors.len() - reached,
            });
        }
        Ok(())
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && (cell.x as usize) < self.width && (cell.y as usize) < self.height
    }

    fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.in_bounds(cell));
        cell.y as usize * self.width + cell.x as usize
    }

    /// Cell kind; everything outside the map reads as obstacle.
    pub fn kind(&self, cell: Cell) -> CellKind {
        if self.in_bounds(cell) {
            self.cells[self.index(cell)]
        } else {
            CellKind::Obstacle
        }
    }

    pub fn is_floor(&self, cell: Cell) -> bool {
        self.kind(cell) == CellKind::Floor
    }

    pub fn floor_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32).flat_map(move |y| {
            (0..self.width as i32)
                .map(move |x| Cell::new(x, y))
                .filter(move |&c| self.is_floor(c))
        })
    }
}

/// The fixed class table. Two pairs intentionally share an appearance color
/// (Knife/Fork and Pot/Container): raw appearance cannot tell them apart,
/// class labels can.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectClass {
    Mug,
    Apple,
    Knife,
    Bread,
    Pot,
    Fork,
    Phone,
    Container,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; NUM_CLASSES] = [
        ObjectClass::Mug,
        ObjectClass::Apple,
        ObjectClass::Knife,
        ObjectClass::Bread,
        ObjectClass::Pot,
        ObjectClass::Fork,
        ObjectClass::Phone,
        ObjectClass::Container,
    ];

    pub fn id(self) -> u8 {
        match self {
            ObjectClass::Mug => 0,
            ObjectClass::Apple => 1,
            ObjectClass::Knife => 2,
            ObjectClass::Bread => 3,
            ObjectClass::Pot => 4,
            ObjectClass::Fork => 5,
            ObjectClass::Phone => 6,
            ObjectClass::Container => 7,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        ObjectClass::ALL.get(id as usize).copied()
    }

    /// Appearance color. Knife/Fork and Pot/Container alias.
    pub fn color_id(self) -> u8 {
        match self {
            ObjectClass::Mug => 0,
            ObjectClass::Apple => 1,
            ObjectClass::Knife => 2,
            ObjectClass::Fork => 2,
            ObjectClass::Bread => 3,
            ObjectClass::Pot => 4,
            ObjectClass::Container => 4,
            ObjectClass::Phone => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Mug => "Mug",
            ObjectClass::Apple => "Apple",
            ObjectClass::Knife => "Knife",
            ObjectClass::Bread => "Bread",
            ObjectClass::Pot => "Pot",
            ObjectClass::Fork => "Fork",
            ObjectClass::Phone => "Phone",
            ObjectClass::Container => "Container",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ObjectClass::ALL.iter().copied().find(|c| c.name().eq_ignore_ascii_case(name))
    }
}

/// Vertical placement of an object; only visible at the matching pitch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeightBand {
    Low,
    Mid,
    High,
}

impl HeightBand {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "low" => Some(HeightBand::Low),
            "mid" => Some(HeightBand::Mid),
            "high" => Some(HeightBand::High),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeightBand::Low => "low",
            HeightBand::Mid => "mid",
            HeightBand::High => "high",
        }
    }
}

/// One placed object. `cell` is the anchor (topmost, then leftmost footprint
/// cell); `footprint` holds every cell the object covers, anchor included.
/// Most objects cover a single cell; bulky ones span a few adjacent cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneObject {
    pub instance_id: u32,
    pub class: ObjectClass,
    pub cell: Cell,
    pub footprint: Vec<Cell>,
    pub height_band: HeightBand,
    pub pickupable: bool,
    pub held: bool,
}

impl SceneObject {
    pub fn color_id(&self) -> u8 {
        self.class.color_id()
    }

    pub fn covers(&self, cell: Cell) -> bool {
        !self.held && self.footprint.contains(&cell)
    }
}

/// Cardinal heading. Rotation order N → E → S → W is clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    /// Unit step in grid coordinates (north is `-y`).
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    /// Unit vector pointing to the agent's right.
    pub fn right_delta(self) -> (i32, i32) {
        self.clockwise().delta()
    }

    pub fn clockwise(self) -> Self {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    pub fn counterclockwise(self) -> Self {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }
}

/// Camera pitch. Maps one-to-one onto height bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pitch {
    Down,
    Level,
    Up,
}

impl Pitch {
    /// The height band visible at this pitch.
    pub fn band(self) -> HeightBand {
        match self {
            Pitch::Down => HeightBand::Low,
            Pitch::Level => HeightBand::Mid,
            Pitch::Up => HeightBand::High,
        }
    }

    /// Normalized value for the observation's pitch plane.
    pub fn normalized(self) -> f64 {
        match self {
            Pitch::Down => 0.0,
            Pitch::Level => 0.5,
            Pitch::Up => 1.0,
        }
    }

    fn raised(self) -> Option<Self> {
        match self {
            Pitch::Down => Some(Pitch::Level),
            Pitch::Level => Some(Pitch::Up),
            Pitch::Up => None,
        }
    }

    fn lowered(self) -> Option<Self> {
        match self {
            Pitch::Up => Some(Pitch::Level),
            Pitch::Level => Some(Pitch::Down),
            Pitch::Down => None,
        }
    }
}

/// Agent pose: cell, heading, pitch and the held object, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPose {
    pub cell: Cell,
    pub heading: Heading,
    pub pitch: Pitch,
    pub holding: Option<u32>,
}

impl AgentPose {
    pub fn new(cell: Cell, heading: Heading) -> Self {
        AgentPose {
            cell,
            heading,
            pitch: Pitch::Level,
            holding: None,
        }
    }

    /// The single interaction cell directly ahead.
    pub fn interaction_cell(self) -> Cell {
        let (dx, dy) = self.heading.delta();
        self.cell.offset(dx, dy)
    }
}

/// The discrete action set. Index order is fixed and defines the policy
/// head's output ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    MoveAhead = 0,
    RotateLeft = 1,
    RotateRight = 2,
    LookUp = 3,
    LookDown = 4,
    PickupObject = 5,
    DropObject = 6,
}

/// Number of actions.
pub const ACTION_COUNT: usize = 7;

impl Action {
    pub const ALL: [Action; ACTION_COUNT] = [
        Action::MoveAhead,
        Action::RotateLeft,
        Action::RotateRight,
        Action::LookUp,
        Action::LookDown,
        Action::PickupObject,
        Action::DropObject,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Action::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::MoveAhead => "MoveAhead",
            Action::RotateLeft => "RotateLeft",
            Action::RotateRight => "RotateRight",
            Action::LookUp => "LookUp",
            Action::LookDown => "LookDown",
            Action::PickupObject => "PickupObject",
            Action::DropObject => "DropObject",
        }
    }
}

/// Per-step outcome flags consumed by the reward and the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOutcome {
    pub collided: bool,
    pub invalid_action: bool,
    pub pickup_attempted: bool,
    pub pickup_succeeded: bool,
    pub picked_instance: Option<u32>,
    pub success: bool,
    pub terminal: bool,
    pub steps_elapsed: u32,
}

/// Everything needed to reproduce one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub scene_id: u8,
    pub target_class: ObjectClass,
    pub start_pose: AgentPose,
    pub max_steps: u32,
    pub rng_seed: u64,
}

/// Full world state of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    pub map: GridMap,
    pub objects: Vec<SceneObject>,
    pub agent: AgentPose,
    pub target_class: ObjectClass,
    pub steps: u32,
    pub max_steps: u32,
    pub terminal: bool,
    pub rng_seed: u64,
}

impl SceneState {
    /// Index of the object covering `cell`, if any. Held objects cover
    /// nothing.
    pub fn object_at(&self, cell: Cell) -> Option<usize> {
        self.objects.iter().position(|o| o.covers(cell))
    }

    /// A cell the agent may move into: floor and free of objects.
    pub fn is_free_floor(&self, cell: Cell) -> bool {
        self.map.is_floor(cell) && self.object_at(cell).is_none()
    }

    /// Grid objects plus held object count; constant across steps.
    pub fn object_census(&self) -> usize {
        self.objects.iter().filter(|o| !o.held).count()
            + usize::from(self.agent.holding.is_some())
    }
}

/// Starts an episode. Deterministic in `spec`; the seed only parameterizes
/// downstream stochastic components (perception noise, policy sampling).
pub fn reset(library: &SceneLibrary, spec: &EpisodeSpec) -> Result<SceneState, SceneError> {
    if spec.max_steps == 0 {
        return Err(SceneError::ZeroStepBudget);
    }
    let parsed = library
        .scene(spec.scene_id)
        .ok_or(SceneError::UnknownScene(spec.scene_id))?;
    if !parsed.objects.iter().any(|o| o.class == spec.target_class) {
        return Err(SceneError::TargetClassAbsent(spec.target_class));
    }
    let state = SceneState {
        map: parsed.map.clone(),
        objects: parsed.objects.clone(),
        agent: AgentPose {
            holding: None,
            ..spec.start_pose
        },
        target_class: spec.target_class,
        steps: 0,
        max_steps: spec.max_steps,
        terminal: false,
        rng_seed: spec.rng_seed,
    };
    if !state.map.is_floor(spec.start_pose.cell) || state.object_at(spec.start_pose.cell).is_some()
    {
        return Err(SceneError::InvalidStartPose {
            x: spec.start_pose.cell.x,
            y: spec.start_pose.cell.y,
        });
    }
    Ok(state)
}

/// Advances the world by one action.
pub fn step(state: &mut SceneState, action: Action) -> Result<StepOutcome, SceneError> {
    if state.terminal {
        return Err(SceneError::StepOnTerminal);
    }
    let mut outcome = StepOutcome::default();
    match action {
        Action::MoveAhead => {
            let ahead = state.agent.interaction_cell();
            if state.is_free_floor(ahead) {
                state.agent.cell = ahead;
            } else {
                outcome.collided = true;
            }
        }
        Action::RotateLeft => state.agent.heading = state.agent.heading.counterclockwise(),
        Action::RotateRight => state.agent.heading = state.agent.heading.clockwise(),
        Action::LookUp => match state.agent.pitch.raised() {
            Some(p) => state.agent.pitch = p,
            None => outcome.invalid_action = true,
        },
        Action::LookDown => match state.agent.pitch.lowered() {
            Some(p) => state.agent.pitch = p,
            None => outcome.invalid_action = true,
        },
        Action::PickupObject => {
            outcome.pickup_attempted = true;
            let target_cell = state.agent.interaction_cell();
            let candidate = state.object_at(target_cell).filter(|&idx| {
                state.objects[idx].pickupable
                    && visible_objects(state).iter().any(|v| v.object_index == idx)
            });
            match (state.agent.holding, candidate) {
                (None, Some(idx)) => {
                    let instance = state.objects[idx].instance_id;
                    state.objects[idx].held = true;
                    state.agent.holding = Some(instance);
                    outcome.pickup_succeeded = true;
                    outcome.picked_instance = Some(instance);
                    outcome.success = state.objects[idx].class == state.target_class;
                }
                _ => outcome.invalid_action = true,
            }
        }
        Action::DropObject => {
            let drop_anchor = state.agent.interaction_cell();
            match state.agent.holding {
                Some(instance) => {
                    let idx = state
                        .objects
                        .iter()
                        .position(|o| o.instance_id == instance)
                        .expect("held object must exist");
                    let anchor = state.objects[idx].cell;
                    let translated: Vec<Cell> = state.objects[idx]
                        .footprint
                        .iter()
                        .map(|c| c.offset(drop_anchor.x - anchor.x, drop_anchor.y - anchor.y))
                        .collect();
                    let placeable = translated
                        .iter()
                        .all(|&c| state.is_free_floor(c) && c != state.agent.cell);
                    if placeable {
                        let obj = &mut state.objects[idx];
                        obj.cell = drop_anchor;
                        obj.footprint = translated;
                        obj.held = false;
                        state.agent.holding = None;
                    } else {
                        outcome.invalid_action = true;
                    }
                }
                None => outcome.invalid_action = true,
            }
        }
    }
    state.steps += 1;
    outcome.steps_elapsed = state.steps;
    outcome.terminal = outcome.success || state.steps >= state.max_steps;
    state.terminal = outcome.terminal;
    Ok(outcome)
}
