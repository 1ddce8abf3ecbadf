//! Single-source shortest paths on the 8-connected grid.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use crate::grid::{CellState, OccupancyGrid, NEIGHBORS8};

/// Which cells a search may enter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Passable {
    /// Free and Unknown cells.
    NotOccupied,
    /// Free cells only; diagonal moves must not clip a non-Free corner.
    FreeNoCornerCut,
}

impl Passable {
    #[inline]
    fn admits(self, s: CellState) -> bool {
        match self {
            Passable::NotOccupied => s != CellState::Occupied,
            Passable::FreeNoCornerCut => s == CellState::Free,
        }
    }
}

/// Reusable Dijkstra state; only cells touched by the last run are reset.
pub(crate) struct Dijkstra {
    dist: Vec<f64>,
    done: Vec<bool>,
    touched: Vec<u32>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

// Non-negative finite f64s order the same as their bit patterns.
#[inline]
fn key(d: f64) -> u64 {
    debug_assert!(d >= 0.0);
    d.to_bits()
}

impl Dijkstra {
    pub(crate) fn new(len: usize) -> Self {
        Dijkstra {
            dist: vec![f64::INFINITY; len],
            done: vec![false; len],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &i in &self.touched {
            let i = i as usize;
            self.dist[i] = f64::INFINITY;
            self.done[i] = false;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Runs from `source`. `settle(idx, dist)` is called once per settled cell
    /// in order of distance; returning false keeps the cell settled but does
    /// not relax its neighbors. `goal` stops the search once that cell settles.
    pub(crate) fn run(
        &mut self,
        m: &OccupancyGrid,
        source: usize,
        passable: Passable,
        goal: Option<usize>,
        mut settle: impl FnMut(usize, f64) -> bool,
    ) {
        self.reset();
        let (rows, cols) = (m.rows() as isize, m.cols() as isize);
        let res = m.resolution();
        let steps = [
            res,
            res,
            res,
            res,
            res * SQRT_2,
            res * SQRT_2,
            res * SQRT_2,
            res * SQRT_2,
        ];
        let cells = m.cells();

        self.dist[source] = 0.0;
        self.touched.push(source as u32);
        self.heap.push(Reverse((key(0.0), source as u32)));

        while let Some(Reverse((_, u))) = self.heap.pop() {
            let u = u as usize;
            if self.done[u] {
                continue;
            }
            self.done[u] = true;
            let du = self.dist[u];
            if !settle(u, du) {
                continue;
            }
            if goal == Some(u) {
                return;
            }
            let (r, c) = ((u / cols as usize) as isize, (u % cols as usize) as isize);
            for (k, &(dr, dc)) in NEIGHBORS8.iter().enumerate() {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= rows || nc >= cols {
                    continue;
                }
                let v = (nr * cols + nc) as usize;
                if self.done[v] || !passable.admits(cells[v]) {
                    continue;
                }
                if passable == Passable::FreeNoCornerCut && dr != 0 && dc != 0 {
                    let a = (r * cols + nc) as usize;
                    let b = (nr * cols + c) as usize;
                    if cells[a] != CellState::Free || cells[b] != CellState::Free {
                        continue;
                    }
                }
                let nd = du + steps[k];
                if nd < self.dist[v] {
                    if self.dist[v] == f64::INFINITY {
                        self.touched.push(v as u32);
                    }
                    self.dist[v] = nd;
                    self.heap.push(Reverse((key(nd), v as u32)));
                }
            }
        }
    }
}
