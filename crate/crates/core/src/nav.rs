//! Grid path planning over known-Free cells and point-robot motion.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use crate::comm::RobotPose;
use crate::grid::{CellState, GridCoord, OccupancyGrid, Point, NEIGHBORS8};

/// A planned route: waypoints starting at the robot position, plus the grid
/// cells the route passes through (for invalidation checks).
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Point>,
    pub cells: Vec<GridCoord>,
    /// Index of the next waypoint to reach.
    pub next: usize,
}

impl Path {
    pub fn goal(&self) -> Option<Point> {
        self.waypoints.last().copied()
    }

    pub fn is_finished(&self) -> bool {
        self.next >= self.waypoints.len()
    }

    /// Total polyline length.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// False once any cell still ahead, or a corner it squeezes past, is no
    /// longer Free in `m`.
    pub fn is_valid(&self, m: &OccupancyGrid) -> bool {
        let ahead = self.next.saturating_sub(1).min(self.cells.len());
        let cells = &self.cells[ahead..];
        cells.iter().all(|&c| m.get(c) == CellState::Free)
            && cells.windows(2).all(|w| corner_clear(m, w[0], w[1]))
    }
}

fn corner_clear(m: &OccupancyGrid, a: GridCoord, b: GridCoord) -> bool {
    if a.row == b.row || a.col == b.col {
        return true;
    }
    m.get(GridCoord::new(a.row, b.col)) == CellState::Free
        && m.get(GridCoord::new(b.row, a.col)) == CellState::Free
}

fn step_allowed(m: &OccupancyGrid, from: GridCoord, to: GridCoord) -> bool {
    m.get(to) == CellState::Free && corner_clear(m, from, to)
}

/// Cells reachable from `from` over Free cells without clipping corners.
pub fn reachable_free(m: &OccupancyGrid, from: GridCoord) -> Vec<bool> {
    let mut seen = vec![false; m.len()];
    if m.get(from) != CellState::Free {
        return seen;
    }
    let (rows, cols) = (m.rows() as isize, m.cols() as isize);
    let cells = m.cells();
    let free = |r: isize, c: isize| cells[(r * cols + c) as usize] == CellState::Free;
    let start = m.index(from);
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let (r, c) = ((u as isize) / cols, (u as isize) % cols);
        for &(dr, dc) in &NEIGHBORS8 {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= rows || nc >= cols {
                continue;
            }
            let v = (nr * cols + nc) as usize;
            if seen[v] || !free(nr, nc) || (dr != 0 && dc != 0 && !(free(r, nc) && free(nr, c))) {
                continue;
            }
            seen[v] = true;
            queue.push_back(v);
        }
    }
    seen
}

fn octile(a: GridCoord, b: GridCoord, res: f64) -> f64 {
    let dr = a.row.abs_diff(b.row) as f64;
    let dc = a.col.abs_diff(b.col) as f64;
    let (lo, hi) = if dr < dc { (dr, dc) } else { (dc, dr) };
    res * (hi - lo + SQRT_2 * lo)
}

/// A* over the cells of `m`.
fn astar(m: &OccupancyGrid, start: GridCoord, goal: GridCoord) -> Option<Vec<GridCoord>> {
    let res = m.resolution();
    let mut g = vec![f64::INFINITY; m.len()];
    let mut parent = vec![usize::MAX; m.len()];
    let mut closed = vec![false; m.len()];
    let mut heap = BinaryHeap::new();
    let si = m.index(start);
    let gi = m.index(goal);
    g[si] = 0.0;
    heap.push(Reverse((octile(start, goal, res).to_bits(), si)));
    while let Some(Reverse((_, u))) = heap.pop() {
        if closed[u] {
            continue;
        }
        closed[u] = true;
        if u == gi {
            let mut cells = vec![goal];
            let mut cur = u;
            while cur != si {
                cur = parent[cur];
                cells.push(m.coord(cur));
            }
            cells.reverse();
            return Some(cells);
        }
        let uc = m.coord(u);
        for (k, &(dr, dc)) in NEIGHBORS8.iter().enumerate() {
            let Some(vc) = m.offset(uc, dr, dc) else {
                continue;
            };
            let v = m.index(vc);
            if closed[v] || !step_allowed(m, uc, vc) {
                continue;
            }
            let nd = g[u] + if k < 4 { res } else { res * SQRT_2 };
            if nd < g[v] {
                g[v] = nd;
                parent[v] = u;
                heap.push(Reverse(((nd + octile(vc, goal, res)).to_bits(), v)));
            }
        }
    }
    None
}

/// Shortest 8-connected route over Free cells of `m`, or None when `to` is
/// unreachable. Unknown cells are never entered.
pub fn plan_path(m: &OccupancyGrid, from: Point, to: Point) -> Option<Path> {
    let start = m.cell_at(from)?;
    let goal = m.cell_at(to)?;
    if m.get(start) != CellState::Free || m.get(goal) != CellState::Free {
        return None;
    }
    if from == to {
        return Some(Path {
            waypoints: vec![from],
            cells: vec![start],
            next: 1,
        });
    }
    let cells = astar(m, start, goal)?;
    let mut waypoints = Vec::with_capacity(cells.len() + 1);
    waypoints.push(from);
    for &c in cells.iter().skip(1).take(cells.len().saturating_sub(2)) {
        waypoints.push(m.cell_center(c));
    }
    waypoints.push(to);
    Some(Path {
        waypoints,
        cells,
        next: 1,
    })
}

/// Moves `pose` along `path` by `v_max · dt` meters or to the path's end.
pub fn step_motion(pose: &RobotPose, path: &mut Path, v_max: f64, dt: f64) -> RobotPose {
    let mut out = *pose;
    let mut budget = v_max * dt;
    while budget > 0.0 && !path.is_finished() {
        let target = path.waypoints[path.next];
        let dx = target.x - out.position.x;
        let dy = target.y - out.position.y;
        let len = dx.hypot(dy);
        if len > 0.0 {
            out.heading = dy.atan2(dx);
        }
        if len <= budget {
            out.position = target;
            budget -= len;
            path.next += 1;
        } else {
            let f = budget / len;
            out.position = Point::new(out.position.x + dx * f, out.position.y + dy * f);
            budget = 0.0;
        }
    }
    out
}
