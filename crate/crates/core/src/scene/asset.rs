//! Scene asset format.
//!
//! Assets are plain text. Header lines of the form `# key: value` declare the
//! scene id, name and object inventory; the remaining lines are the character
//! grid (`#` obstacle, `.` floor, lowercase letter = cell of the object with
//! that inventory letter). A letter repeated in adjacent cells forms a
//! multi-cell footprint. An inventory entry may instead carry an explicit
//! `@ x,y` placement for a single-cell object.
//!
//! Example:
//!
//! ```text
//! # id: 1
//! # name: Demo
//! # object: a = Mug mid
//! # object: b = Knife mid @ 3,1
//! #####
//! #a..#
//! #...#
//! #####
//! ```

use super::{Cell, CellKind, GridMap, HeightBand, ObjectClass, SceneError, SceneObject};
use std::collections::BTreeMap;

/// A parsed scene asset: the map plus its initial object inventory.
/// `letters` keeps each object's grid letter for round-trip rendering.
#[derive(Debug, Clone)]
pub struct ParsedScene {
    pub map: GridMap,
    pub objects: Vec<SceneObject>,
    pub name: String,
    pub letters: Vec<char>,
}

#[derive(Debug)]
struct InventoryEntry {
    letter: char,
    class: ObjectClass,
    band: HeightBand,
    pickupable: bool,
    placement: Option<Cell>,
    line: usize,
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> SceneError {
    SceneError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

/// Parses and validates a scene asset.
pub fn load_scene(text: &str) -> Result<ParsedScene, SceneError> {
    let mut id: Option<u8> = None;
    let mut name = String::new();
    let mut inventory: Vec<InventoryEntry> = Vec::new();
    let mut grid_rows: Vec<(usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            if !grid_rows.is_empty() {
                return Err(parse_err(line_no, 1, "header line after grid rows"));
            }
            parse_header_line(rest, line_no, &mut id, &mut name, &mut inventory)?;
        } else {
            grid_rows.push((line_no, line.to_string()));
        }
    }

    let id = id.ok_or_else(|| parse_err(1, 1, "missing `id` header"))?;
    if grid_rows.is_empty() {
        return Err(parse_err(1, 1, "missing grid"));
    }
    let width = grid_rows[0].1.chars().count();
    let height = grid_rows.len();
    let mut cells = Vec::with_capacity(width * height);
    let mut letter_cells: BTreeMap<char, Vec<Cell>> = BTreeMap::new();

    for (y, (line_no, row)) in grid_rows.iter().enumerate() {
        let row_chars: Vec<char> = row.chars().collect();
        if row_chars.len() != width {
            return Err(parse_err(
                *line_no,
                row_chars.len().max(1),
                format!("ragged grid row: expected width {width}, got {}", row_chars.len()),
            ));
        }
        for (x, ch) in row_chars.iter().enumerate() {
            match ch {
                '#' => cells.push(CellKind::Obstacle),
                '.' => cells.push(CellKind::Floor),
                c if c.is_ascii_lowercase() => {
                    cells.push(CellKind::Floor);
                    letter_cells
                        .entry(*c)
                        .or_default()
                        .push(Cell::new(x as i32, y as i32));
                }
                other => {
                    return Err(parse_err(
                        *line_no,
                        x + 1,
                        format!("unexpected grid character {other:?}"),
                    ))
                }
            }
        }
    }

    // Every grid letter must be declared.
    for (letter, cells) in &letter_cells {
        if !inventory.iter().any(|e| e.letter == *letter) {
            let first = cells[0];
            return Err(parse_err(
                first.y as usize + 1 + header_line_count(text),
                first.x as usize + 1,
                format!("grid letter '{letter}' missing from the object inventory"),
            ));
        }
    }

    let map = GridMap::from_cells(id, width, height, cells)?;

    let mut objects = Vec::with_capacity(inventory.len());
    for (instance_id, entry) in inventory.iter().enumerate() {
        let footprint = match (letter_cells.get(&entry.letter), entry.placement) {
            (Some(_), Some(_)) => {
                return Err(parse_err(
                    entry.line,
                    1,
                    format!(
                        "object '{}' has both grid cells and an explicit placement",
                        entry.letter
                    ),
                ));
            }
            (Some(cells), None) => cells.clone(),
            (None, Some(cell)) => {
                if map.kind(cell) == CellKind::Obstacle {
                    return Err(SceneError::ObjectOnObstacle {
                        letter: entry.letter,
                        x: cell.x,
                        y: cell.y,
                    });
                }
                vec![cell]
            }
            (None, None) => {
                return Err(parse_err(
                    entry.line,
                    1,
                    format!("object '{}' never appears in the grid", entry.letter),
                ));
            }
        };
        check_footprint_connected(&footprint, entry)?;
        objects.push(SceneObject {
            instance_id: instance_id as u32,
            class: entry.class,
            cell: footprint[0],
            footprint,
            height_band: entry.band,
            pickupable: entry.pickupable,
            held: false,
        });
    }

    // No two objects may share a cell. Grid letters are exclusive by
    // construction; explicit placements can collide.
    for i in 0..objects.len() {
        for j in (i + 1)..objects.len() {
            for &cell in &objects[i].footprint {
                if objects[j].footprint.contains(&cell) {
                    return Err(SceneError::DuplicateObjectCell { x: cell.x, y: cell.y });
                }
            }
        }
    }

    let letters = inventory.iter().map(|e| e.letter).collect();
    Ok(ParsedScene {
        map,
        objects,
        name,
        letters,
    })
}

fn header_line_count(text: &str) -> usize {
    text.lines()
        .take_while(|l| l.trim_end().is_empty() || l.starts_with("# "))
        .count()
}

fn parse_header_line(
    rest: &str,
    line_no: usize,
    id: &mut Option<u8>,
    name: &mut String,
    inventory: &mut Vec<InventoryEntry>,
) -> Result<(), SceneError> {
    let Some((key, value)) = rest.split_once(':') else {
        return Err(parse_err(line_no, 1, "header line is not `key: value`"));
    };
    let value = value.trim();
    match key.trim() {
        "id" => {
            *id = Some(
                value
                    .parse::<u8>()
                    .map_err(|_| parse_err(line_no, 1, format!("invalid scene id {value:?}")))?,
            );
        }
        "name" => *name = value.to_string(),
        "object" => inventory.push(parse_inventory_entry(value, line_no)?),
        other => return Err(parse_err(line_no, 1, format!("unknown header key {other:?}"))),
    }
    Ok(())
}

fn parse_inventory_entry(value: &str, line_no: usize) -> Result<InventoryEntry, SceneError> {
    // Shape: `<letter> = <Class> <band> [fixed] [@ x,y]`
    let Some((letter_part, spec_part)) = value.split_once('=') else {
        return Err(parse_err(line_no, 1, "object entry is not `<letter> = ...`"));
    };
    let letter_part = letter_part.trim();
    let mut letters = letter_part.chars();
    let letter = match (letters.next(), letters.next()) {
        (Some(c), None) if c.is_ascii_lowercase() => c,
        _ => {
            return Err(parse_err(
                line_no,
                1,
                format!("object letter must be a single lowercase letter, got {letter_part:?}"),
            ))
        }
    };
    let (spec_part, placement) = match spec_part.split_once('@') {
        Some((head, coords)) => {
            let coords = coords.trim();
            let Some((x, y)) = coords.split_once(',') else {
                return Err(parse_err(line_no, 1, format!("invalid placement {coords:?}")));
            };
            let x = x.trim().parse::<i32>().map_err(|_| {
                parse_err(line_no, 1, format!("invalid placement x {x:?}"))
            })?;
            let y = y.trim().parse::<i32>().map_err(|_| {
                parse_err(line_no, 1, format!("invalid placement y {y:?}"))
            })?;
            (head, Some(Cell::new(x, y)))
        }
        None => (spec_part, None),
    };
    let mut tokens = spec_part.split_whitespace();
    let class_name = tokens
        .next()
        .ok_or_else(|| parse_err(line_no, 1, "missing object class"))?;
    let class = ObjectClass::from_name(class_name)
        .ok_or_else(|| parse_err(line_no, 1, format!("unknown object class {class_name:?}")))?;
    let band_name = tokens
        .next()
        .ok_or_else(|| parse_err(line_no, 1, "missing height band"))?;
    let band = HeightBand::from_name(band_name)
        .ok_or_else(|| parse_err(line_no, 1, format!("unknown height band {band_name:?}")))?;
    let mut pickupable = true;
    for flag in tokens {
        match flag {
            "fixed" => pickupable = false,
            other => return Err(parse_err(line_no, 1, format!("unknown object flag {other:?}"))),
        }
    }
    Ok(InventoryEntry {
        letter,
        class,
        band,
        pickupable,
        placement,
        line: line_no,
    })
}

fn check_footprint_connected(footprint: &[Cell], entry: &InventoryEntry) -> Result<(), SceneError> {
    if footprint.len() <= 1 {
        return Ok(());
    }
    let mut seen = vec![false; footprint.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1usize;
    while let Some(i) = stack.pop() {
        for neighbor in footprint[i].neighbors4() {
            if let Some(j) = footprint.iter().position(|&c| c == neighbor) {
                if !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    stack.push(j);
                }
            }
        }
    }
    if reached != footprint.len() {
        return Err(parse_err(
            entry.line,
            1,
            format!("object '{}' footprint is not connected", entry.letter),
        ));
    }
    Ok(())
}

/// A registry of parsed scenes keyed by scene id.
#[derive(Debug, Clone, Default)]
pub struct SceneLibrary {
    scenes: BTreeMap<u8, ParsedScene>,
}

impl SceneLibrary {
    pub fn new() -> Self {
        SceneLibrary::default()
    }

    /// The four shipped kitchen floor plans.
    pub fn shipped() -> Self {
        let mut lib = SceneLibrary::new();
        for text in [
            include_str!("../../assets/floorplan1.scene"),
            include_str!("../../assets/floorplan2.scene"),
            include_str!("../../assets/floorplan3.scene"),
            include_str!("../../assets/floorplan4.scene"),
        ] {
            let parsed = load_scene(text).expect("shipped asset must parse");
            lib.add(parsed);
        }
        lib
    }

    pub fn add(&mut self, scene: ParsedScene) {
        self.scenes.insert(scene.map.id(), scene);
    }

    pub fn scene(&self, id: u8) -> Option<&ParsedScene> {
        self.scenes.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = u8> + '_ {
        self.scenes.keys().copied()
    }
}
