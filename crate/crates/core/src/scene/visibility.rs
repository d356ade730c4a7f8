//! Field-of-view and line-of-sight queries.
//!
//! The agent sees a forward cone: cells at forward depth `1..=FOV_DEPTH`
//! whose lateral offset is at most the depth. A cell inside the cone is
//! actually seen only if the straight segment between cell centers is not
//! interrupted by an obstacle. Objects additionally require the height band
//! matching the current pitch.
//!
//! Line of sight uses the supercover rule: the segment between the two cell
//! centers is blocked if it touches the closed unit square of any obstacle
//! cell other than the two endpoints. All tests are exact integer/rational
//! arithmetic on doubled coordinates, so there is no floating-point
//! tie-breaking.

use super::{AgentPose, Cell, CellKind, GridMap, SceneState};

/// Forward depth of the field-of-view cone, in cells.
pub const FOV_DEPTH: i32 = 5;

/// One visible object together with its world-frame footprint cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibleObject {
    pub object_index: usize,
    pub footprint: Vec<Cell>,
}

/// Forward/lateral offsets of `cell` in the agent's heading frame.
pub fn heading_frame_offsets(agent: &AgentPose, cell: Cell) -> (i32, i32) {
    let (fx, fy) = agent.heading.delta();
    let (rx, ry) = agent.heading.right_delta();
    let dx = cell.x - agent.cell.x;
    let dy = cell.y - agent.cell.y;
    (dx * fx + dy * fy, dx * rx + dy * ry)
}

/// Whether `cell` lies in the forward view cone (excluding the agent cell).
pub fn in_fov_cone(agent: &AgentPose, cell: Cell) -> bool {
    let (forward, lateral) = heading_frame_offsets(agent, cell);
    forward >= 1 && forward <= FOV_DEPTH && lateral.abs() <= forward
}

/// Whether the cell is observed at all: the agent's own cell, or a cone cell
/// with clear line of sight. Height bands do not apply to cells.
pub fn cell_known(state: &SceneState, cell: Cell) -> bool {
    if cell == state.agent.cell {
        return true;
    }
    state.map.in_bounds(cell)
        && in_fov_cone(&state.agent, cell)
        && los_clear(&state.map, state.agent.cell, cell)
}

/// Objects currently visible to the agent: anchor inside the cone, clear
/// line of sight to the anchor, height band matching the pitch. Footprints
/// are reported in full world coordinates.
pub fn visible_objects(state: &SceneState) -> Vec<VisibleObject> {
    let band = state.agent.pitch.band();
    state
        .objects
        .iter()
        .enumerate()
        .filter(|(_, obj)| {
            !obj.held
                && obj.height_band == band
                && in_fov_cone(&state.agent, obj.cell)
                && los_clear(&state.map, state.agent.cell, obj.cell)
        })
        .map(|(idx, obj)| VisibleObject {
            object_index: idx,
            footprint: obj.footprint.clone(),
        })
        .collect()
}

/// True if no obstacle cell (other than the endpoints) touches the segment
/// between the centers of `a` and `b`.
pub fn los_clear(map: &GridMap, a: Cell, b: Cell) -> bool {
    let lo_x = a.x.min(b.x);
    let hi_x = a.x.max(b.x);
    let lo_y = a.y.min(b.y);
    let hi_y = a.y.max(b.y);
    for cy in lo_y..=hi_y {
        for cx in lo_x..=hi_x {
            let cell = Cell::new(cx, cy);
            if cell == a || cell == b {
                continue;
            }
            if map.kind(cell) == CellKind::Obstacle && segment_touches_cell(a, b, cell) {
                return false;
            }
        }
    }
    true
}

/// Exact test: does the closed unit square of `cell` touch the closed
/// segment between the centers of `a` and `b`? Computed on doubled
/// coordinates (centers at odd integers, squares spanning two units).
pub fn segment_touches_cell(a: Cell, b: Cell, cell: Cell) -> bool {
    let ax = 2 * a.x as i64 + 1;
    let ay = 2 * a.y as i64 + 1;
    let dx = (2 * b.x as i64 + 1) - ax;
    let dy = (2 * b.y as i64 + 1) - ay;
    // Parameter interval [0, 1] clipped against the square on both axes.
    let mut t_lo = Frac::new(0, 1);
    let mut t_hi = Frac::new(1, 1);
    for (start, delta, lo, hi) in [
        (ax, dx, 2 * cell.x as i64, 2 * cell.x as i64 + 2),
        (ay, dy, 2 * cell.y as i64, 2 * cell.y as i64 + 2),
    ] {
        if delta == 0 {
            if start < lo || start > hi {
                return false;
            }
            continue;
        }
        let mut enter = Frac::new(lo - start, delta);
        let mut exit = Frac::new(hi - start, delta);
        if delta < 0 {
            std::mem::swap(&mut enter, &mut exit);
        }
        if enter.gt(&t_lo) {
            t_lo = enter;
        }
        if exit.lt(&t_hi) {
            t_hi = exit;
        }
    }
    !t_lo.gt(&t_hi)
}

/// Rational number with positive denominator, for exact clipping.
#[derive(Debug, Clone, Copy)]
struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    fn new(num: i64, den: i64) -> Self {
        debug_assert!(den != 0);
        if den < 0 {
            Frac { num: -num, den: -den }
        } else {
            Frac { num, den }
        }
    }

    fn gt(&self, other: &Frac) -> bool {
        self.num * other.den > other.num * self.den
    }

    fn lt(&self, other: &Frac) -> bool {
        self.num * other.den < other.num * self.den
    }
}
