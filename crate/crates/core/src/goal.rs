//! Duration-adaptive goal assignment.
//!
//! A robot keeps its current goal until it arrives or until the time since the
//! goal was assigned reaches `t_ref = k_ref · d(pos_pre, g_cur) / v_max`. Since
//! no path is shorter than the straight line and the robot never exceeds
//! `v_max`, `t_ref` with `k_ref < 1` is a lower bound on the real travel time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::EntropyField;
use crate::grid::{CellState, GridCoord, OccupancyGrid, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignTrigger {
    Arrival,
    Timeout,
    Bootstrap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalState {
    pub g_cur: Option<Point>,
    pub g_new: Option<Point>,
    pub pos_pre: Point,
    pub assigned_at: f64,
    pub t_ref: f64,
    pub k_ref: f64,
    pub v_max: f64,
    pub arrival_tolerance: f64,
}

/// Reference duration for a goal `d` meters away in a straight line.
pub fn reference_duration(k_ref: f64, pos_pre: Point, goal: Point, v_max: f64) -> f64 {
    k_ref * pos_pre.distance(goal) / v_max
}

impl GoalState {
    pub fn new(position: Point, k_ref: f64, v_max: f64, arrival_tolerance: f64) -> Result<Self> {
        if !(k_ref > 0.0 && k_ref < 1.0) {
            return Err(Error::scenario(
                "k_ref",
                format!("{k_ref} must be in (0, 1)"),
            ));
        }
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::scenario("v_max", format!("{v_max} must be > 0")));
        }
        if !(arrival_tolerance.is_finite() && arrival_tolerance >= 0.0) {
            return Err(Error::scenario(
                "arrival_tolerance",
                format!("{arrival_tolerance} must be >= 0"),
            ));
        }
        Ok(GoalState {
            g_cur: None,
            g_new: None,
            pos_pre: position,
            assigned_at: 0.0,
            t_ref: 0.0,
            k_ref,
            v_max,
            arrival_tolerance,
        })
    }

    /// Which reassignment condition holds right now, if any.
    pub fn due(&self, pos_cur: Point, now: f64) -> Option<AssignTrigger> {
        let Some(goal) = self.g_cur else {
            return Some(AssignTrigger::Bootstrap);
        };
        if pos_cur.distance(goal) <= self.arrival_tolerance {
            Some(AssignTrigger::Arrival)
        } else if now - self.assigned_at >= self.t_ref {
            Some(AssignTrigger::Timeout)
        } else {
            None
        }
    }

    /// Records `g_new` and promotes it to the current goal when a condition
    /// holds. Returns the trigger that fired.
    pub fn maybe_assign(
        &mut self,
        pos_cur: Point,
        now: f64,
        g_new: Point,
    ) -> Option<AssignTrigger> {
        self.g_new = Some(g_new);
        let trigger = self.due(pos_cur, now)?;
        self.g_cur = Some(g_new);
        self.pos_pre = pos_cur;
        self.assigned_at = now;
        self.t_ref = reference_duration(self.k_ref, pos_cur, g_new, self.v_max);
        Some(trigger)
    }

    /// Forgets the current goal, e.g. after it became unreachable. The next
    /// assignment is a bootstrap.
    pub fn drop_goal(&mut self) {
        self.g_cur = None;
    }
}

/// Free cell with the lowest supported field value, ties to the row-major
/// first. `allowed`, when given, further restricts the candidates.
pub fn select_goal_cell(
    field: &EntropyField,
    m: &OccupancyGrid,
    allowed: Option<&[bool]>,
) -> Option<GridCoord> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..field.h_total.len() {
        if !field.support[i] || m.at(i) != CellState::Free {
            continue;
        }
        if allowed.is_some_and(|a| !a[i]) {
            continue;
        }
        let v = field.h_total[i];
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| m.coord(i))
}

/// Center of the field's minimizing Free cell, or None when the field has no
/// supported cell.
pub fn select_new_goal(field: &EntropyField, m: &OccupancyGrid) -> Option<Point> {
    select_goal_cell(field, m, None).map(|c| m.cell_center(c))
}
