use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BinaryHeap;
use std::sync::Arc;

fn library() -> Arc<SceneLibrary> {
    Arc::new(SceneLibrary::shipped())
}

fn demo_asset() -> &'static str {
    "# id: 7\n\
     # name: Demo\n\
     # object: a = Mug mid\n\
     # object: b = Apple low\n\
     # object: c = Knife high\n\
     # object: d = Fork mid\n\
     #########\n\
     #a......#\n\
     #...#...#\n\
     #.b.#.c.#\n\
     #...#...#\n\
     #.......#\n\
     #....d..#\n\
     #.......#\n\
     #########\n"
}

fn demo_spec(target: ObjectClass) -> EpisodeSpec {
    EpisodeSpec {
        scene_id: 7,
        target_class: target,
        start_pose: AgentPose::new(Cell::new(1, 5), Heading::North),
        max_steps: 50,
        rng_seed: 11,
    }
}

fn demo_library() -> Arc<SceneLibrary> {
    let mut lib = SceneLibrary::new();
    lib.add(load_scene(demo_asset()).unwrap());
    Arc::new(lib)
}

// ---------------------------------------------------------------------------
// asset parsing
// ---------------------------------------------------------------------------

#[test]
fn parses_nine_by_nine_asset_with_four_objects() {
    let parsed = load_scene(demo_asset()).unwrap();
    assert_eq!(parsed.map.width(), 9);
    assert_eq!(parsed.map.height(), 9);
    assert_eq!(parsed.map.id(), 7);
    assert_eq!(parsed.objects.len(), 4);
    assert_eq!(parsed.name, "Demo");
}

#[test]
fn rejects_object_on_obstacle() {
    let asset = "# id: 7\n# name: Bad\n# object: a = Mug mid @ 4,2\n\
                 #########\n\
                 #.......#\n\
                 #...#...#\n\
                 #.......#\n\
                 #########\n";
    match load_scene(asset) {
        Err(SceneError::ObjectOnObstacle { letter: 'a', x: 4, y: 2 }) => {}
        other => panic!("expected object-on-obstacle, got {other:?}"),
    }
}

#[test]
fn rejects_duplicate_object_cell() {
    let asset = "# id: 7\n# name: Bad\n\
                 # object: a = Mug mid\n\
                 # object: b = Apple mid @ 1,1\n\
                 #####\n\
                 #a..#\n\
                 #...#\n\
                 #####\n";
    match load_scene(asset) {
        Err(SceneError::DuplicateObjectCell { x: 1, y: 1 }) => {}
        other => panic!("expected duplicate-cell error, got {other:?}"),
    }
}

#[test]
fn rejects_disconnected_floor() {
    let asset = "# id: 7\n# name: Bad\n\
                 #####\n\
                 #.#.#\n\
                 #####\n";
    match load_scene(asset) {
        Err(SceneError::DisconnectedFloor { unreachable: 1 }) => {}
        other => panic!("expected disconnected-floor error, got {other:?}"),
    }
}

#[test]
fn rejects_undeclared_grid_letter() {
    let asset = "# id: 7\n# name: Bad\n\
                 #####\n\
                 #z..#\n\
                 #####\n";
    assert!(matches!(load_scene(asset), Err(SceneError::Parse { .. })));
}

#[test]
fn parse_error_carries_line_and_column() {
    let asset = "# id: 7\n# name: Bad\n\
                 #####\n\
                 #..?#\n\
                 #####\n";
    match load_scene(asset) {
        Err(SceneError::Parse { line: 4, col: 4, .. }) => {}
        other => panic!("expected parse error at 4:4, got {other:?}"),
    }
}

/// The shipped FloorPlan1 inventory, frozen against the asset's own header.
#[test]
fn floorplan1_golden_inventory() {
    let lib = library();
    let scene = lib.scene(1).unwrap();
    assert_eq!(scene.name, "FloorPlan1");
    assert_eq!(scene.map.width(), 9);
    assert_eq!(scene.map.height(), 9);
    let golden = [
        (0, ObjectClass::Mug, Cell::new(2, 2), HeightBand::Mid, true),
        (1, ObjectClass::Apple, Cell::new(6, 2), HeightBand::Mid, true),
        (2, ObjectClass::Knife, Cell::new(1, 6), HeightBand::Mid, true),
        (3, ObjectClass::Fork, Cell::new(7, 6), HeightBand::Mid, true),
        (4, ObjectClass::Bread, Cell::new(7, 7), HeightBand::Low, true),
    ];
    assert_eq!(scene.objects.len(), golden.len());
    for (obj, (id, class, cell, band, pickupable)) in scene.objects.iter().zip(golden) {
        assert_eq!(obj.instance_id, id);
        assert_eq!(obj.class, class);
        assert_eq!(obj.cell, cell);
        assert_eq!(obj.height_band, band);
        assert_eq!(obj.pickupable, pickupable);
        assert_eq!(obj.footprint, vec![cell]);
        assert!(!obj.held);
    }
}

#[test]
fn shipped_assets_all_parse_with_aliased_pairs_present() {
    let lib = library();
    assert_eq!(lib.ids().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    for id in 1..=4u8 {
        let scene = lib.scene(id).unwrap();
        // Every shipped kitchen carries at least one color-aliased class
        // pair, so appearance alone cannot identify every target.
        let has_alias = scene.objects.iter().any(|a| {
            scene.objects.iter().any(|b| {
                a.instance_id != b.instance_id
                    && a.class != b.class
                    && a.class.color_id() == b.class.color_id()
            })
        });
        assert!(has_alias, "floorplan {id} lacks an aliased pair");
    }
}

#[test]
fn multi_cell_footprints_parse_connected() {
    let lib = library();
    let scene = lib.scene(2).unwrap();
    let container = scene
        .objects
        .iter()
        .find(|o| o.class == ObjectClass::Container)
        .unwrap();
    assert_eq!(container.footprint.len(), 4);
    assert_eq!(container.cell, Cell::new(2, 2));
}

// ---------------------------------------------------------------------------
// reset
// ---------------------------------------------------------------------------

#[test]
fn reset_is_deterministic() {
    let lib = demo_library();
    let spec = demo_spec(ObjectClass::Mug);
    let a = reset(&lib, &spec).unwrap();
    let b = reset(&lib, &spec).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reset_rejects_unknown_scene() {
    let lib = demo_library();
    let mut spec = demo_spec(ObjectClass::Mug);
    spec.scene_id = 42;
    assert!(matches!(reset(&lib, &spec), Err(SceneError::UnknownScene(42))));
}

#[test]
fn reset_rejects_absent_target_class() {
    let lib = demo_library();
    let spec = demo_spec(ObjectClass::Phone);
    assert!(matches!(
        reset(&lib, &spec),
        Err(SceneError::TargetClassAbsent(ObjectClass::Phone))
    ));
}

#[test]
fn seed_change_only_affects_rng_stream() {
    let lib = demo_library();
    let spec_a = demo_spec(ObjectClass::Mug);
    let mut spec_b = spec_a;
    spec_b.rng_seed = 999;
    let a = reset(&lib, &spec_a).unwrap();
    let b = reset(&lib, &spec_b).unwrap();
    assert_eq!(a.map, b.map);
    assert_eq!(a.objects, b.objects);
    assert_eq!(a.agent, b.agent);
    assert_ne!(a.rng_seed, b.rng_seed);
}

// ---------------------------------------------------------------------------
// step semantics
// ---------------------------------------------------------------------------

#[test]
fn move_into_wall_collides_without_moving() {
    let lib = demo_library();
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            start_pose: AgentPose::new(Cell::new(1, 5), Heading::West),
            ..demo_spec(ObjectClass::Mug)
        },
    )
    .unwrap();
    let pose = state.agent;
    let outcome = step(&mut state, Action::MoveAhead).unwrap();
    assert!(outcome.collided);
    assert_eq!(state.agent.cell, pose.cell);
}

#[test]
fn four_left_rotations_restore_heading() {
    let lib = demo_library();
    let mut state = reset(&lib, &demo_spec(ObjectClass::Mug)).unwrap();
    let original = state.agent.heading;
    for _ in 0..4 {
        step(&mut state, Action::RotateLeft).unwrap();
    }
    assert_eq!(state.agent.heading, original);
}

#[test]
fn rotate_left_then_right_is_identity_on_pose() {
    let lib = demo_library();
    let mut state = reset(&lib, &demo_spec(ObjectClass::Mug)).unwrap();
    let pose = state.agent;
    step(&mut state, Action::RotateLeft).unwrap();
    step(&mut state, Action::RotateRight).unwrap();
    assert_eq!(state.agent, pose);
}

#[test]
fn pickup_adjacent_target_succeeds_and_terminates() {
    let lib = demo_library();
    // Agent at (2,1) facing west; Mug sits at (1,1), mid band, level pitch.
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            start_pose: AgentPose::new(Cell::new(2, 1), Heading::West),
            ..demo_spec(ObjectClass::Mug)
        },
    )
    .unwrap();
    let outcome = step(&mut state, Action::PickupObject).unwrap();
    assert!(outcome.pickup_succeeded);
    assert!(outcome.success);
    assert!(outcome.terminal);
    assert_eq!(state.agent.holding, Some(0));
}

#[test]
fn pickup_at_wrong_pitch_is_invalid() {
    let lib = demo_library();
    // Apple at (2,3) is low band; at level pitch it is not visible.
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            start_pose: AgentPose::new(Cell::new(1, 3), Heading::East),
            ..demo_spec(ObjectClass::Apple)
        },
    )
    .unwrap();
    let outcome = step(&mut state, Action::PickupObject).unwrap();
    assert!(outcome.invalid_action);
    assert!(!outcome.pickup_succeeded);
    // Looking down aligns the band and the pickup succeeds.
    step(&mut state, Action::LookDown).unwrap();
    let outcome = step(&mut state, Action::PickupObject).unwrap();
    assert!(outcome.success);
}

#[test]
fn wrong_class_pickup_is_non_terminal() {
    let lib = demo_library();
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            start_pose: AgentPose::new(Cell::new(2, 1), Heading::West),
            ..demo_spec(ObjectClass::Fork)
        },
    )
    .unwrap();
    let outcome = step(&mut state, Action::PickupObject).unwrap();
    assert!(outcome.pickup_succeeded);
    assert!(!outcome.success);
    assert!(!outcome.terminal);
}

#[test]
fn drop_requires_free_floor_ahead() {
    let lib = demo_library();
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            start_pose: AgentPose::new(Cell::new(2, 1), Heading::West),
            ..demo_spec(ObjectClass::Fork)
        },
    )
    .unwrap();
    step(&mut state, Action::PickupObject).unwrap();
    // Facing the west wall: the interaction cell (0,1) is an obstacle.
    step(&mut state, Action::MoveAhead).unwrap();
    let outcome = step(&mut state, Action::DropObject).unwrap();
    assert!(outcome.invalid_action);
    assert!(state.agent.holding.is_some());
    // Turn around: (2,1) is free floor.
    step(&mut state, Action::RotateLeft).unwrap();
    step(&mut state, Action::RotateLeft).unwrap();
    let outcome = step(&mut state, Action::DropObject).unwrap();
    assert!(!outcome.invalid_action);
    assert_eq!(state.agent.holding, None);
    assert_eq!(state.object_at(Cell::new(2, 1)), Some(0));
}

#[test]
fn drop_with_empty_hands_is_invalid() {
    let lib = demo_library();
    let mut state = reset(&lib, &demo_spec(ObjectClass::Mug)).unwrap();
    let outcome = step(&mut state, Action::DropObject).unwrap();
    assert!(outcome.invalid_action);
}

#[test]
fn look_up_clamps_at_extreme() {
    let lib = demo_library();
    let mut state = reset(&lib, &demo_spec(ObjectClass::Mug)).unwrap();
    assert!(!step(&mut state, Action::LookUp).unwrap().invalid_action);
    let outcome = step(&mut state, Action::LookUp).unwrap();
    assert!(outcome.invalid_action);
    assert_eq!(state.agent.pitch, Pitch::Up);
}

#[test]
fn step_on_terminal_state_is_an_error() {
    let lib = demo_library();
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            max_steps: 1,
            ..demo_spec(ObjectClass::Mug)
        },
    )
    .unwrap();
    let outcome = step(&mut state, Action::RotateLeft).unwrap();
    assert!(outcome.terminal);
    assert!(matches!(
        step(&mut state, Action::RotateLeft),
        Err(SceneError::StepOnTerminal)
    ));
}

#[test]
fn budget_exhaustion_terminates() {
    let lib = demo_library();
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            max_steps: 3,
            ..demo_spec(ObjectClass::Mug)
        },
    )
    .unwrap();
    assert!(!step(&mut state, Action::RotateLeft).unwrap().terminal);
    assert!(!step(&mut state, Action::RotateLeft).unwrap().terminal);
    let outcome = step(&mut state, Action::RotateLeft).unwrap();
    assert!(outcome.terminal);
    assert!(!outcome.success);
    assert_eq!(outcome.steps_elapsed, 3);
}

// ---------------------------------------------------------------------------
// step invariants (property tests)
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replays_are_bitwise_identical(actions in prop::collection::vec(0usize..7, 1..120), seed in 0u64..1000) {
        let lib = library();
        let spec = EpisodeSpec {
            scene_id: 1,
            target_class: ObjectClass::Knife,
            start_pose: AgentPose::new(Cell::new(3, 5), Heading::North),
            max_steps: 200,
            rng_seed: seed,
        };
        let mut a = reset(&lib, &spec).unwrap();
        let mut b = reset(&lib, &spec).unwrap();
        for &idx in &actions {
            if a.terminal {
                break;
            }
            let action = Action::from_index(idx).unwrap();
            let oa = step(&mut a, action).unwrap();
            let ob = step(&mut b, action).unwrap();
            prop_assert_eq!(oa, ob);
            prop_assert_eq!(&a, &b);
        }
    }

    #[test]
    fn pose_stays_on_free_floor_and_objects_are_conserved(actions in prop::collection::vec(0usize..7, 1..200)) {
        let lib = library();
        let spec = EpisodeSpec {
            scene_id: 2,
            target_class: ObjectClass::Knife,
            start_pose: AgentPose::new(Cell::new(5, 4), Heading::South),
            max_steps: 400,
            rng_seed: 3,
        };
        let mut state = reset(&lib, &spec).unwrap();
        let census = state.object_census();
        for &idx in &actions {
            if state.terminal {
                break;
            }
            step(&mut state, Action::from_index(idx).unwrap()).unwrap();
            prop_assert!(state.map.is_floor(state.agent.cell));
            prop_assert!(state.object_at(state.agent.cell).is_none());
            prop_assert_eq!(state.object_census(), census);
        }
    }
}

// ---------------------------------------------------------------------------
// visibility
// ---------------------------------------------------------------------------

#[test]
fn object_behind_agent_is_excluded() {
    let lib = demo_library();
    // Mug at (1,1); agent just east of it, facing away.
    let state = reset(
        &lib,
        &EpisodeSpec {
            start_pose: AgentPose::new(Cell::new(2, 1), Heading::East),
            ..demo_spec(ObjectClass::Mug)
        },
    )
    .unwrap();
    assert!(visible_objects(&state).iter().all(|v| v.object_index != 0));
}

#[test]
fn object_behind_obstacle_is_excluded() {
    let lib = demo_library();
    // Knife at (6,3), high band; wall column at x=4 between agent and knife.
    let mut state = reset(
        &lib,
        &EpisodeSpec {
            start_pose: AgentPose::new(Cell::new(1, 3), Heading::East),
            ..demo_spec(ObjectClass::Mug)
        },
    )
    .unwrap();
    state.agent.pitch = Pitch::Up;
    assert!(visible_objects(&state).is_empty());
    // Same forward distance with nothing in between: visible.
    state.agent.cell = Cell::new(2, 5);
    state.agent.heading = Heading::East;
    state.objects[2].cell = Cell::new(6, 5);
    state.objects[2].footprint = vec![Cell::new(6, 5)];
    assert_eq!(visible_objects(&state).len(), 1);
}

/// Independent re-derivation of the cone, occlusion and band predicates.
mod visibility_oracle {
    use super::*;

    /// Cone test written as explicit per-heading arithmetic.
    fn oracle_in_cone(agent: &AgentPose, cell: Cell) -> bool {
        let dx = cell.x - agent.cell.x;
        let dy = cell.y - agent.cell.y;
        let (depth, side) = match agent.heading {
            Heading::North => (-dy, dx),
            Heading::South => (dy, -dx),
            Heading::East => (dx, dy),
            Heading::West => (-dx, -dy),
        };
        (1..=FOV_DEPTH).contains(&depth) && side.abs() <= depth
    }

    /// Segment/box intersection via a separating-axis style check over the
    /// box corners, entirely in integers.
    fn oracle_segment_touches(a: Cell, b: Cell, cell: Cell) -> bool {
        let (ax, ay) = (2 * a.x as i64 + 1, 2 * a.y as i64 + 1);
        let (bx, by) = (2 * b.x as i64 + 1, 2 * b.y as i64 + 1);
        let (x0, y0) = (2 * cell.x as i64, 2 * cell.y as i64);
        let (x1, y1) = (x0 + 2, y0 + 2);
        // Bounding boxes must overlap.
        if ax.max(bx) < x0 || ax.min(bx) > x1 || ay.max(by) < y0 || ay.min(by) > y1 {
            return false;
        }
        // All four corners strictly on one side of the segment line means
        // no intersection.
        let cross = |px: i64, py: i64| (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        let corners = [cross(x0, y0), cross(x1, y0), cross(x0, y1), cross(x1, y1)];
        let all_pos = corners.iter().all(|&c| c > 0);
        let all_neg = corners.iter().all(|&c| c < 0);
        !(all_pos || all_neg)
    }

    fn oracle_los(map: &GridMap, a: Cell, b: Cell) -> bool {
        for y in 0..map.height() as i32 {
            for x in 0..map.width() as i32 {
                let cell = Cell::new(x, y);
                if cell == a || cell == b || map.kind(cell) != CellKind::Obstacle {
                    continue;
                }
                if oracle_segment_touches(a, b, cell) {
                    return false;
                }
            }
        }
        true
    }

    pub fn oracle_visible(state: &SceneState) -> Vec<usize> {
        let band = match state.agent.pitch {
            Pitch::Down => HeightBand::Low,
            Pitch::Level => HeightBand::Mid,
            Pitch::Up => HeightBand::High,
        };
        state
            .objects
            .iter()
            .enumerate()
            .filter(|(_, o)| {
                !o.held
                    && o.height_band == band
                    && oracle_in_cone(&state.agent, o.cell)
                    && oracle_los(&state.map, state.agent.cell, o.cell)
            })
            .map(|(i, _)| i)
            .collect()
    }
}

#[test]
fn visibility_matches_exhaustive_oracle_on_fixture_poses() {
    let lib = library();
    let scene = lib.scene(1).unwrap();
    let free: Vec<Cell> = scene
        .map
        .floor_cells()
        .filter(|&c| !scene.objects.iter().any(|o| o.footprint.contains(&c)))
        .collect();
    let mut checked = 0;
    for &cell in &free {
        for heading in Heading::ALL {
            for pitch in [Pitch::Down, Pitch::Level, Pitch::Up] {
                let state = SceneState {
                    map: scene.map.clone(),
                    objects: scene.objects.clone(),
                    agent: AgentPose {
                        cell,
                        heading,
                        pitch,
                        holding: None,
                    },
                    target_class: ObjectClass::Mug,
                    steps: 0,
                    max_steps: 10,
                    terminal: false,
                    rng_seed: 0,
                };
                let got: Vec<usize> =
                    visible_objects(&state).iter().map(|v| v.object_index).collect();
                let want = visibility_oracle::oracle_visible(&state);
                assert_eq!(got, want, "pose {cell:?} {heading:?} {pitch:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 400);
}

#[test]
fn visible_objects_lie_within_chebyshev_fov_depth() {
    let lib = library();
    for id in 1..=4u8 {
        let scene = lib.scene(id).unwrap();
        for &cell in scene
            .map
            .floor_cells()
            .filter(|&c| !scene.objects.iter().any(|o| o.footprint.contains(&c)))
            .collect::<Vec<_>>()
            .iter()
        {
            for heading in Heading::ALL {
                let state = SceneState {
                    map: scene.map.clone(),
                    objects: scene.objects.clone(),
                    agent: AgentPose::new(cell, heading),
                    target_class: ObjectClass::Mug,
                    steps: 0,
                    max_steps: 10,
                    terminal: false,
                    rng_seed: 0,
                };
                for v in visible_objects(&state) {
                    let anchor = state.objects[v.object_index].cell;
                    assert!(anchor.chebyshev_distance(cell) <= FOV_DEPTH);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// shortest paths
// ---------------------------------------------------------------------------

#[test]
fn adjacent_start_has_distance_zero() {
    let lib = demo_library();
    let scene = lib.scene(7).unwrap();
    // Mug anchor (1,1); (2,1) is adjacent floor.
    assert_eq!(
        shortest_path_length(&scene.map, Cell::new(2, 1), Cell::new(1, 1)),
        Some(0)
    );
}

#[test]
fn straight_corridor_distance() {
    let asset = "# id: 8\n# name: Corridor\n\
                 #########\n\
                 #.......#\n\
                 #########\n";
    let parsed = load_scene(asset).unwrap();
    // Goal adjacency of (7,1) is (6,1); five steps from (1,1).
    assert_eq!(
        shortest_path_length(&parsed.map, Cell::new(1, 1), Cell::new(7, 1)),
        Some(5)
    );
}

#[test]
fn walled_off_goal_is_unreachable() {
    // A goal cell fully surrounded by obstacles has no adjacency to reach.
    let asset = "# id: 8\n# name: Pocket\n\
                 #######\n\
                 #...###\n\
                 #...#.#\n\
                 #...###\n\
                 #######\n";
    // Note: (5,2) is a floor cell but disconnected, so the asset itself is
    // invalid; build the map by hand instead.
    assert!(load_scene(asset).is_err());
    let mut cells = vec![CellKind::Obstacle; 7 * 5];
    for (x, y) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2), (1, 3), (2, 3), (3, 3)] {
        cells[y * 7 + x] = CellKind::Floor;
    }
    let map = GridMap::from_cells(8, 7, 5, cells).unwrap();
    assert_eq!(shortest_path_length(&map, Cell::new(1, 1), Cell::new(5, 2)), None);
}

/// Independent Dijkstra with a binary heap over unit-weight floor edges.
fn dijkstra_oracle(map: &GridMap, from: Cell, to_adjacent_of: Cell) -> Option<u32> {
    let goals: Vec<Cell> = to_adjacent_of
        .neighbors4()
        .into_iter()
        .filter(|&c| map.is_floor(c))
        .collect();
    if goals.is_empty() || !map.is_floor(from) {
        return None;
    }
    let idx = |c: Cell| c.y as usize * map.width() + c.x as usize;
    let mut dist: Vec<u32> = vec![u32::MAX; map.width() * map.height()];
    let mut heap: BinaryHeap<std::cmp::Reverse<(u32, i32, i32)>> = BinaryHeap::new();
    dist[idx(from)] = 0;
    heap.push(std::cmp::Reverse((0, from.x, from.y)));
    while let Some(std::cmp::Reverse((d, x, y))) = heap.pop() {
        let cell = Cell::new(x, y);
        if d > dist[idx(cell)] {
            continue;
        }
        if goals.contains(&cell) {
            return Some(d);
        }
        for next in cell.neighbors4() {
            if map.is_floor(next) && d + 1 < dist[idx(next)] {
                dist[idx(next)] = d + 1;
                heap.push(std::cmp::Reverse((d + 1, next.x, next.y)));
            }
        }
    }
    None
}

fn random_connected_map(rng: &mut ChaCha8Rng, width: usize, height: usize) -> GridMap {
    loop {
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if border || rng.gen::<f64>() < 0.25 {
                    cells.push(CellKind::Obstacle);
                } else {
                    cells.push(CellKind::Floor);
                }
            }
        }
        if let Ok(map) = GridMap::from_cells(9, width, height, cells) {
            return map;
        }
    }
}

#[test]
fn bfs_matches_dijkstra_oracle_on_random_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let map = random_connected_map(&mut rng, 15, 15);
    let floors: Vec<Cell> = map.floor_cells().collect();
    for _ in 0..100 {
        let from = floors[rng.gen_range(0..floors.len())];
        let target = floors[rng.gen_range(0..floors.len())];
        assert_eq!(
            shortest_path_length(&map, from, target),
            dijkstra_oracle(&map, from, target),
            "from {from:?} to adjacency of {target:?}"
        );
    }
}

#[test]
fn bfs_adjacency_distance_is_symmetric_against_oracle() {
    // Symmetry up to adjacency-set choice: checked against the oracle with
    // swapped endpoints rather than assumed.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let map = random_connected_map(&mut rng, 13, 13);
    let floors: Vec<Cell> = map.floor_cells().collect();
    for _ in 0..50 {
        let a = floors[rng.gen_range(0..floors.len())];
        let b = floors[rng.gen_range(0..floors.len())];
        assert_eq!(
            shortest_path_length(&map, a, b),
            dijkstra_oracle(&map, a, b)
        );
        assert_eq!(
            shortest_path_length(&map, b, a),
            dijkstra_oracle(&map, b, a)
        );
    }
}
