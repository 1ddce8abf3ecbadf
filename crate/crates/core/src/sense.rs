//! Noiseless range sensor: evenly spaced rays cast against ground truth.

use std::f64::consts::TAU;

use crate::grid::{CellState, GridCoord, OccupancyGrid, Point};

/// Ray count that leaves no cell inside the sensor disk unvisited: rays are at
/// most half a cell apart at full range.
pub fn auto_ray_count(d_s: f64, resolution: f64) -> usize {
    ((2.0 * TAU * d_s / resolution).ceil() as usize).max(360)
}

/// Casts `rays` rays of length `d_s` from `origin` through `truth`, joining
/// what they see into `m`. Cells crossed before a hit become Free, the hit
/// cell Occupied. Returns the number of cells of `m` that changed.
///
/// A wall cell sitting in an inner corner touches open space only at one
/// vertex, so no ray can enter it. The beam footprint covers it anyway: a ray
/// stopping next to such a corner marks the corner cell too. Without this,
/// every inner corner would leave a frontier that can never be closed.
pub fn sense(
    origin: Point,
    truth: &OccupancyGrid,
    m: &mut OccupancyGrid,
    d_s: f64,
    rays: usize,
) -> usize {
    debug_assert!(truth.same_shape(m));
    let Some(start) = truth.cell_at(origin) else {
        return 0;
    };
    let mut changed = 0;
    let si = truth.index(start);
    if truth.at(si) == CellState::Occupied {
        return usize::from(m.raise(si, CellState::Occupied));
    }
    changed += usize::from(m.raise(si, CellState::Free));
    for k in 0..rays {
        let theta = TAU * k as f64 / rays as f64;
        changed += cast_ray(origin, start, theta.cos(), theta.sin(), truth, m, d_s);
    }
    changed
}

/// Grid traversal along one ray. At exact corner crossings both side cells
/// are visited, so rays cannot slip between diagonal wall cells.
fn cast_ray(
    origin: Point,
    start: GridCoord,
    dx: f64,
    dy: f64,
    truth: &OccupancyGrid,
    m: &mut OccupancyGrid,
    d_s: f64,
) -> usize {
    let res = truth.resolution();
    let (rows, cols) = (truth.rows() as isize, truth.cols() as isize);
    let (mut col, mut row) = (start.col as isize, start.row as isize);
    let step_c: isize = if dx > 0.0 { 1 } else { -1 };
    let step_r: isize = if dy > 0.0 { 1 } else { -1 };
    let next_boundary =
        |cell: isize, step: isize| (cell + if step > 0 { 1 } else { 0 }) as f64 * res;
    let mut t_max_c = if dx.abs() < 1e-15 {
        f64::INFINITY
    } else {
        (next_boundary(col, step_c) - origin.x) / dx
    };
    let mut t_max_r = if dy.abs() < 1e-15 {
        f64::INFINITY
    } else {
        (next_boundary(row, step_r) - origin.y) / dy
    };
    let t_delta_c = if dx.abs() < 1e-15 {
        f64::INFINITY
    } else {
        res / dx.abs()
    };
    let t_delta_r = if dy.abs() < 1e-15 {
        f64::INFINITY
    } else {
        res / dy.abs()
    };

    let mut changed = 0;
    // Visit one cell; returns false when the ray must stop there.
    let mut visit = |r: isize, c: isize, m: &mut OccupancyGrid| -> bool {
        if r < 0 || c < 0 || r >= rows || c >= cols {
            return false;
        }
        let i = (r * cols + c) as usize;
        if truth.at(i) == CellState::Occupied {
            changed += usize::from(m.raise(i, CellState::Occupied));
            false
        } else {
            changed += usize::from(m.raise(i, CellState::Free));
            true
        }
    };

    loop {
        let prev = (row, col);
        let t = t_max_c.min(t_max_r);
        if t >= d_s {
            break;
        }
        if t_max_c == t_max_r {
            let a = visit(row, col + step_c, m);
            let b = visit(row + step_r, col, m);
            if !a || !b {
                break;
            }
            col += step_c;
            row += step_r;
            t_max_c += t_delta_c;
            t_max_r += t_delta_r;
        } else if t_max_c < t_max_r {
            col += step_c;
            t_max_c += t_delta_c;
        } else {
            row += step_r;
            t_max_r += t_delta_r;
        }
        if !visit(row, col, m) {
            if (row - prev.0).abs() + (col - prev.1).abs() == 1 {
                changed += close_corner(prev, (row, col), truth, m);
            }
            break;
        }
    }
    changed
}

/// Marks the wall cells that close an inner corner with the hit cell `hit`,
/// seen from the open cell `from` next to it.
fn close_corner(
    from: (isize, isize),
    hit: (isize, isize),
    truth: &OccupancyGrid,
    m: &mut OccupancyGrid,
) -> usize {
    let (rows, cols) = (truth.rows() as isize, truth.cols() as isize);
    let occupied = |r: isize, c: isize| {
        r >= 0
            && c >= 0
            && r < rows
            && c < cols
            && truth.at((r * cols + c) as usize) == CellState::Occupied
    };
    let (dr, dc) = (hit.0 - from.0, hit.1 - from.1);
    let mut changed = 0;
    for e in [-1, 1] {
        let (pr, pc) = (dc * e, dr * e);
        if occupied(from.0 + pr, from.1 + pc) && occupied(hit.0 + pr, hit.1 + pc) {
            let i = ((hit.0 + pr) * cols + hit.1 + pc) as usize;
            changed += usize::from(m.raise(i, CellState::Occupied));
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_arena_disk_is_free() {
        // 20 m arena at 0.1 m, robot in the middle.
        let truth = OccupancyGrid::filled(200, 200, 0.1, CellState::Free).unwrap();
        let mut m = truth.blank_like();
        let origin = Point::new(10.02, 9.97);
        let d_s = 7.0;
        sense(origin, &truth, &mut m, d_s, auto_ray_count(d_s, 0.1));
        for i in 0..m.len() {
            let c = m.coord(i);
            let d = origin.distance(truth.cell_center(c));
            if d <= d_s - 0.1 {
                assert_eq!(m.at(i), CellState::Free, "{c} at {d}");
            } else if d > d_s + 0.1 {
                assert_eq!(m.at(i), CellState::Unknown, "{c} at {d}");
            }
        }
    }

    #[test]
    fn wall_blocks_view() {
        // Wall along column 10; robot two cells to its left.
        let mut truth = OccupancyGrid::filled(21, 30, 0.1, CellState::Free).unwrap();
        for r in 0..21 {
            truth.set(GridCoord::new(r, 10), CellState::Occupied);
        }
        let mut m = truth.blank_like();
        sense(Point::new(0.85, 1.05), &truth, &mut m, 3.0, 720);
        assert_eq!(m.get(GridCoord::new(10, 10)), CellState::Occupied);
        assert_eq!(m.get(GridCoord::new(8, 10)), CellState::Occupied);
        for r in 0..21 {
            for c in 11..30 {
                assert_eq!(m.get(GridCoord::new(r, c)), CellState::Unknown);
            }
        }
        assert_eq!(m.get(GridCoord::new(10, 9)), CellState::Free);
    }

    #[test]
    fn diagonal_gap_is_sealed() {
        // Two diagonal wall cells; a 45° ray through their shared corner must stop.
        let mut truth = OccupancyGrid::filled(6, 6, 1.0, CellState::Free).unwrap();
        truth.set(GridCoord::new(2, 3), CellState::Occupied);
        truth.set(GridCoord::new(3, 2), CellState::Occupied);
        let mut m = truth.blank_like();
        sense(Point::new(0.5, 0.5), &truth, &mut m, 8.0, 8);
        assert_eq!(m.get(GridCoord::new(4, 4)), CellState::Unknown);
        assert_eq!(m.get(GridCoord::new(2, 2)), CellState::Free);
    }

    #[test]
    fn inner_corners_leave_no_frontier() {
        // Thick walls along the bottom and left; the corner cell (2, 2) is
        // reachable by rays only through a single vertex.
        let mut truth = OccupancyGrid::filled(30, 30, 0.1, CellState::Free).unwrap();
        for k in 0..30 {
            for w in 0..3 {
                truth.set(GridCoord::new(w, k), CellState::Occupied);
                truth.set(GridCoord::new(k, w), CellState::Occupied);
            }
        }
        let mut m = truth.blank_like();
        sense(
            Point::new(1.5, 1.5),
            &truth,
            &mut m,
            2.5,
            auto_ray_count(2.5, 0.1),
        );
        assert_eq!(m.get(GridCoord::new(2, 2)), CellState::Occupied);
        assert!(!crate::grid::detect_frontiers(&m).contains(&GridCoord::new(3, 3)));
    }

    #[test]
    fn sensing_twice_is_idempotent() {
        let mut truth = OccupancyGrid::filled(40, 40, 0.1, CellState::Free).unwrap();
        truth.set(GridCoord::new(20, 25), CellState::Occupied);
        let mut m = truth.blank_like();
        let p = Point::new(2.0, 2.0);
        assert!(sense(p, &truth, &mut m, 2.5, 500) > 0);
        let snapshot = m.clone();
        assert_eq!(sense(p, &truth, &mut m, 2.5, 500), 0);
        assert_eq!(m, snapshot);
    }
}
