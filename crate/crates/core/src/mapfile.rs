//! ASCII world maps.
//!
//! ```text
//! rows cols resolution_m
//! #####
//! #...#
//! #####
//! ```
//!
//! `#` is Occupied and `.` is Free. Ground truth has no Unknown cells.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{CellState, OccupancyGrid};

pub fn parse_map(text: &str) -> Result<OccupancyGrid> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (hline, header) = lines.next().ok_or(Error::MapParse {
        line: 1,
        msg: "missing header `rows cols resolution_m`".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::MapParse {
            line: hline,
            msg: format!("header needs `rows cols resolution_m`, got {header:?}"),
        });
    }
    let bad = |what: &str, v: &str| Error::MapParse {
        line: hline,
        msg: format!("invalid {what} {v:?}"),
    };
    let rows: usize = fields[0].parse().map_err(|_| bad("rows", fields[0]))?;
    let cols: usize = fields[1].parse().map_err(|_| bad("cols", fields[1]))?;
    let resolution: f64 = fields[2]
        .parse()
        .map_err(|_| bad("resolution", fields[2]))?;
    if rows == 0 || cols == 0 {
        return Err(bad("dimensions", header));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(bad("resolution", fields[2]));
    }

    let mut cells = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (line, row) in lines {
        if seen_rows == rows {
            if row.trim().is_empty() {
                continue;
            }
            return Err(Error::MapParse {
                line,
                msg: format!("expected {rows} rows, found more"),
            });
        }
        let n = row.chars().count();
        if n != cols {
            return Err(Error::MapParse {
                line,
                msg: format!("ragged row: {n} columns, expected {cols}"),
            });
        }
        for (col, ch) in row.chars().enumerate() {
            cells.push(match ch {
                '#' => CellState::Occupied,
                '.' => CellState::Free,
                other => {
                    return Err(Error::MapParse {
                        line,
                        msg: format!("column {}: unexpected character {other:?}", col + 1),
                    })
                }
            });
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::MapParse {
            line: hline + seen_rows + 1,
            msg: format!("expected {rows} rows, found {seen_rows}"),
        });
    }
    OccupancyGrid::from_cells(rows, cols, resolution, cells)
}

pub fn load_map(path: impl AsRef<Path>) -> Result<OccupancyGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_map(&text)
}

/// Inverse of [`parse_map`]. Unknown cells have no map symbol and are written as `?`.
pub fn format_map(m: &OccupancyGrid) -> String {
    let mut out = String::with_capacity(m.len() + m.rows() + 32);
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), m.resolution());
    for row in m.cells().chunks(m.cols()) {
        out.extend(row.iter().map(|c| match c {
            CellState::Occupied => '#',
            CellState::Free => '.',
            CellState::Unknown => '?',
        }));
        out.push('\n');
    }
    out
}
