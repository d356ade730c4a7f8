//! Shortest-path oracle over floor cells.
//!
//! Paths use 4-neighborhood breadth-first search over floor cells and ignore
//! objects: objects sit on floor and can be moved, so the optimal-path
//! metric and the distance-shaping term both measure the map itself.
//! Expansion order is the fixed N, E, S, W neighbor order.

use super::{Cell, GridMap};
use std::collections::VecDeque;

/// BFS distance from `from` to the nearest floor cell 4-adjacent to
/// `to_adjacent_of`. Returns `None` when no adjacent floor cell is
/// reachable.
pub fn shortest_path_length(map: &GridMap, from: Cell, to_adjacent_of: Cell) -> Option<u32> {
    let goals: Vec<Cell> = to_adjacent_of
        .neighbors4()
        .into_iter()
        .filter(|&c| map.is_floor(c))
        .collect();
    if goals.is_empty() {
        return None;
    }
    if goals.contains(&from) {
        return Some(0);
    }
    let field = distance_field(map, &goals);
    if !map.is_floor(from) {
        return None;
    }
    field[cell_index(map, from)]
}

/// Multi-source BFS distance field: for every floor cell, the distance to
/// the nearest floor cell 4-adjacent to any of `goal_cells`. Non-floor
/// cells and unreachable cells read `None`.
pub fn distance_field_to_adjacency(map: &GridMap, goal_cells: &[Cell]) -> Vec<Option<u32>> {
    let mut sources = Vec::new();
    for &goal in goal_cells {
        for neighbor in goal.neighbors4() {
            if map.is_floor(neighbor) && !sources.contains(&neighbor) {
                sources.push(neighbor);
            }
        }
    }
    distance_field(map, &sources)
}

fn distance_field(map: &GridMap, sources: &[Cell]) -> Vec<Option<u32>> {
    let mut dist = vec![None; map.width() * map.height()];
    let mut queue = VecDeque::new();
    for &source in sources {
        let idx = cell_index(map, source);
        if dist[idx].is_none() {
            dist[idx] = Some(0);
            queue.push_back(source);
        }
    }
    while let Some(cell) = queue.pop_front() {
        let here = dist[cell_index(map, cell)].expect("queued cells have distances");
        for next in cell.neighbors4() {
            if map.is_floor(next) {
                let idx = cell_index(map, next);
                if dist[idx].is_none() {
                    dist[idx] = Some(here + 1);
                    queue.push_back(next);
                }
            }
        }
    }
    dist
}

fn cell_index(map: &GridMap, cell: Cell) -> usize {
    cell.y as usize * map.width() + cell.x as usize
}
