//! Occupancy grids, the map-merge join, frontier detection and clustering.
//!
//! Every grid in one simulation shares the same shape and world frame: cell
//! `(row, col)` covers `[col·res, (col+1)·res) × [row·res, (row+1)·res)` in
//! meters, so merging is a cell-aligned operation.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of a single grid cell.
///
/// The derived ordering `Unknown < Free < Occupied` is the lattice order used
/// by [`merge`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

impl CellState {
    pub const ALL: [CellState; 3] = [CellState::Unknown, CellState::Free, CellState::Occupied];

    /// Numeric occupancy: Free 0, Unknown 0.5, Occupied 1.
    pub fn occupancy(self) -> f64 {
        match self {
            CellState::Free => 0.0,
            CellState::Unknown => 0.5,
            CellState::Occupied => 1.0,
        }
    }

    #[inline]
    pub fn join(self, other: CellState) -> CellState {
        self.max(other)
    }

    #[inline]
    pub fn is_known(self) -> bool {
        self != CellState::Unknown
    }
}

/// Integer cell index. The derived ordering is row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCoord {
    pub row: usize,
    pub col: usize,
}

impl GridCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        GridCoord { row, col }
    }

    /// Chebyshev (king-move) distance.
    pub fn chebyshev(self, other: GridCoord) -> usize {
        self.row
            .abs_diff(other.row)
            .max(self.col.abs_diff(other.col))
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Continuous world position in meters; `x` grows with the column index and
/// `y` with the row index.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// The eight king-move offsets as `(drow, dcol)`, axial ones first.
pub(crate) const NEIGHBORS8: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (0, 1),
    (1, 0),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Dense row-major occupancy grid.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    rows: usize,
    cols: usize,
    resolution: f64,
    cells: Vec<CellState>,
}

impl fmt::Debug for OccupancyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OccupancyGrid")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("resolution", &self.resolution)
            .finish_non_exhaustive()
    }
}

// Resolution is validated finite and positive, so `Eq` is sound.
impl Eq for OccupancyGrid {}

impl std::hash::Hash for OccupancyGrid {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
        self.cols.hash(state);
        self.resolution.to_bits().hash(state);
        self.cells.hash(state);
    }
}

impl OccupancyGrid {
    pub fn filled(rows: usize, cols: usize, resolution: f64, fill: CellState) -> Result<Self> {
        Self::from_cells(rows, cols, resolution, vec![fill; rows * cols])
    }

    pub fn unknown(rows: usize, cols: usize, resolution: f64) -> Result<Self> {
        Self::filled(rows, cols, resolution, CellState::Unknown)
    }

    pub fn from_cells(
        rows: usize,
        cols: usize,
        resolution: f64,
        cells: Vec<CellState>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGrid(format!("empty grid {rows}x{cols}")));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "resolution {resolution} must be > 0"
            )));
        }
        if cells.len() != rows * cols {
            return Err(Error::InvalidGrid(format!(
                "{} cells for a {rows}x{cols} grid",
                cells.len()
            )));
        }
        Ok(OccupancyGrid {
            rows,
            cols,
            resolution,
            cells,
        })
    }

    /// Same shape, every cell Unknown.
    pub fn blank_like(&self) -> Self {
        OccupancyGrid {
            rows: self.rows,
            cols: self.cols,
            resolution: self.resolution,
            cells: vec![CellState::Unknown; self.cells.len()],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, c: GridCoord) -> usize {
        debug_assert!(c.row < self.rows && c.col < self.cols);
        c.row * self.cols + c.col
    }

    #[inline]
    pub fn coord(&self, idx: usize) -> GridCoord {
        GridCoord::new(idx / self.cols, idx % self.cols)
    }

    pub fn contains(&self, c: GridCoord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    #[inline]
    pub fn get(&self, c: GridCoord) -> CellState {
        self.cells[self.index(c)]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> CellState {
        self.cells[idx]
    }

    #[inline]
    pub fn set(&mut self, c: GridCoord, state: CellState) {
        let i = self.index(c);
        self.cells[i] = state;
    }

    /// Joins `state` into the cell; returns true when the cell changed.
    #[inline]
    pub fn raise(&mut self, idx: usize, state: CellState) -> bool {
        let cur = self.cells[idx];
        if state > cur {
            self.cells[idx] = state;
            true
        } else {
            false
        }
    }

    /// Offset a cell by `(dr, dc)`, or None when it falls off the grid.
    #[inline]
    pub fn offset(&self, c: GridCoord, dr: isize, dc: isize) -> Option<GridCoord> {
        let r = c.row.checked_add_signed(dr)?;
        let col = c.col.checked_add_signed(dc)?;
        (r < self.rows && col < self.cols).then_some(GridCoord::new(r, col))
    }

    pub fn neighbors8(&self, c: GridCoord) -> impl Iterator<Item = GridCoord> + '_ {
        NEIGHBORS8
            .iter()
            .filter_map(move |&(dr, dc)| self.offset(c, dr, dc))
    }

    pub fn cell_center(&self, c: GridCoord) -> Point {
        Point::new(
            (c.col as f64 + 0.5) * self.resolution,
            (c.row as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing `p`, or None outside the grid.
    pub fn cell_at(&self, p: Point) -> Option<GridCoord> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let col = (p.x / self.resolution).floor() as usize;
        let row = (p.y / self.resolution).floor() as usize;
        let c = GridCoord::new(row, col);
        self.contains(c).then_some(c)
    }

    pub fn width_m(&self) -> f64 {
        self.cols as f64 * self.resolution
    }

    pub fn height_m(&self) -> f64 {
        self.rows as f64 * self.resolution
    }

    pub fn same_shape(&self, other: &OccupancyGrid) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.resolution == other.resolution
    }

    pub fn check_shape(&self, other: &OccupancyGrid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: self.shape_string(),
                right: other.shape_string(),
            })
        }
    }

    fn shape_string(&self) -> String {
        format!("{}x{} @ {} m", self.rows, self.cols, self.resolution)
    }

    /// In-place join `self ← self ⊞ other`. Returns whether any cell changed.
    pub fn join_from(&mut self, other: &OccupancyGrid) -> Result<bool> {
        self.check_shape(other)?;
        let mut changed = false;
        for (a, &b) in self.cells.iter_mut().zip(&other.cells) {
            if b > *a {
                *a = b;
                changed = true;
            }
        }
        Ok(changed)
    }

    /// True when every cell of `self` is at or above the same cell of `other`
    /// in the lattice order.
    pub fn dominates(&self, other: &OccupancyGrid) -> bool {
        self.same_shape(other) && self.cells.iter().zip(&other.cells).all(|(a, b)| a >= b)
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_known()).count()
    }
}

/// Map merge: the cell-wise join under `Unknown < Free < Occupied`.
pub fn merge(a: &OccupancyGrid, b: &OccupancyGrid) -> Result<OccupancyGrid> {
    let mut out = a.clone();
    out.join_from(b)?;
    Ok(out)
}

fn is_frontier(m: &OccupancyGrid, c: GridCoord) -> bool {
    m.get(c) == CellState::Free && m.neighbors8(c).any(|n| m.get(n) == CellState::Unknown)
}

/// Free cells with at least one Unknown 8-neighbor, in row-major order.
pub fn detect_frontiers(m: &OccupancyGrid) -> Vec<GridCoord> {
    (0..m.len())
        .map(|i| m.coord(i))
        .filter(|&c| is_frontier(m, c))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierCluster {
    pub cells: Vec<GridCoord>,
    pub centroid: GridCoord,
}

impl FrontierCluster {
    /// Number of frontier cells, `C_q`.
    pub fn size(&self) -> usize {
        self.cells.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontierClustering {
    pub clusters: Vec<FrontierCluster>,
    pub total_frontier_cells: usize,
}

impl FrontierClustering {
    /// Number of clusters, `N_C`.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Groups frontier cells into 8-connected components.
///
/// Clusters come out ordered by their row-major-first cell; each cluster's
/// cells are row-major sorted. The centroid is the member nearest the mean of
/// the members, with ties going to the row-major-first member.
pub fn cluster_frontiers(frontiers: &[GridCoord]) -> FrontierClustering {
    let mut cells: Vec<GridCoord> = frontiers.to_vec();
    cells.sort_unstable();
    cells.dedup();

    let lookup = |c: GridCoord| cells.binary_search(&c).ok();
    let mut seen = vec![false; cells.len()];
    let mut clusters = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..cells.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            let c = cells[i];
            members.push(c);
            for &(dr, dc) in &NEIGHBORS8 {
                let (Some(r), Some(col)) =
                    (c.row.checked_add_signed(dr), c.col.checked_add_signed(dc))
                else {
                    continue;
                };
                if let Some(j) = lookup(GridCoord::new(r, col)) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        members.sort_unstable();
        let centroid = member_nearest_mean(&members);
        clusters.push(FrontierCluster {
            cells: members,
            centroid,
        });
    }

    FrontierClustering {
        total_frontier_cells: cells.len(),
        clusters,
    }
}

fn member_nearest_mean(members: &[GridCoord]) -> GridCoord {
    // Scaled by n so ties compare exactly.
    let n = members.len() as i128;
    let (sr, sc) = members.iter().fold((0i128, 0i128), |(r, c), m| {
        (r + m.row as i128, c + m.col as i128)
    });
    let mut best = members[0];
    let mut best_d = i128::MAX;
    for &m in members {
        let dr = n * m.row as i128 - sr;
        let dc = n * m.col as i128 - sc;
        let d = dr * dr + dc * dc;
        if d < best_d {
            best = m;
            best_d = d;
        }
    }
    best
}

/// Ground-truth Free cells reachable (8-connected over Free) from a set of
/// start cells. This is the denominator of every coverage figure.
#[derive(Clone, Debug)]
pub struct ReachableSet {
    cells: Vec<usize>,
    mask: Vec<bool>,
}

impl ReachableSet {
    pub fn from_starts(truth: &OccupancyGrid, starts: &[GridCoord]) -> Self {
        let mut mask = vec![false; truth.len()];
        let mut queue = VecDeque::new();
        for &s in starts {
            if truth.contains(s) && truth.get(s) == CellState::Free {
                let i = truth.index(s);
                if !mask[i] {
                    mask[i] = true;
                    queue.push_back(s);
                }
            }
        }
        while let Some(c) = queue.pop_front() {
            for n in truth.neighbors8(c) {
                let j = truth.index(n);
                if !mask[j] && truth.at(j) == CellState::Free {
                    mask[j] = true;
                    queue.push_back(n);
                }
            }
        }
        let cells = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        ReachableSet { cells, mask }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn indices(&self) -> &[usize] {
        &self.cells
    }

    /// Fraction of reachable cells that are known in `m`.
    pub fn coverage(&self, m: &OccupancyGrid) -> Result<f64> {
        if m.len() != self.mask.len() {
            return Err(Error::ShapeMismatch {
                left: format!("{} cells", m.len()),
                right: format!("{} cells", self.mask.len()),
            });
        }
        if self.cells.is_empty() {
            return Ok(1.0);
        }
        let known = self.cells.iter().filter(|&&i| m.at(i).is_known()).count();
        Ok(known as f64 / self.cells.len() as f64)
    }

    /// Coverage of the union of several maps, without materializing it.
    pub fn union_coverage<'a>(&self, maps: impl IntoIterator<Item = &'a OccupancyGrid>) -> f64 {
        let maps: Vec<&OccupancyGrid> = maps.into_iter().collect();
        if self.cells.is_empty() {
            return 1.0;
        }
        let known = self
            .cells
            .iter()
            .filter(|&&i| maps.iter().any(|m| m.at(i).is_known()))
            .count();
        known as f64 / self.cells.len() as f64
    }
}

/// Fraction of `truth`'s Free cells reachable from `starts` that are known in `m`.
pub fn coverage_fraction(
    m: &OccupancyGrid,
    truth: &OccupancyGrid,
    starts: &[GridCoord],
) -> Result<f64> {
    m.check_shape(truth)?;
    ReachableSet::from_starts(truth, starts).coverage(m)
}
