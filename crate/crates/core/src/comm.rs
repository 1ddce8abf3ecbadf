//! Two-layer communication: positions are always shared (low-speed layer);
//! maps travel only along edges of the range-limited graph (high-speed layer).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{OccupancyGrid, Point};

/// Zero-based robot index.
pub type RobotId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub robot_id: RobotId,
    pub position: Point,
    pub heading: f64,
}

impl RobotPose {
    pub fn new(robot_id: RobotId, position: Point) -> Self {
        RobotPose {
            robot_id,
            position,
            heading: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeEventKind {
    EdgeUp,
    EdgeDown,
}

/// A link appearing or disappearing; `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEvent {
    #[serde(rename = "type")]
    pub kind: EdgeEventKind,
    pub i: RobotId,
    pub j: RobotId,
}

/// Dynamic graph over robots; an edge `{i, j}` exists iff the robots are
/// strictly closer than `r_comm`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommGraph {
    robot_count: usize,
    r_comm: f64,
    edges: BTreeSet<(RobotId, RobotId)>,
}

fn ordered(i: RobotId, j: RobotId) -> (RobotId, RobotId) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl CommGraph {
    /// `r_comm` may be `f64::INFINITY` for perfect communication.
    pub fn new(robot_count: usize, r_comm: f64) -> Result<Self> {
        if robot_count == 0 {
            return Err(Error::RobotIds("robot count must be positive".into()));
        }
        if r_comm.is_nan() || r_comm < 0.0 {
            return Err(Error::scenario("r_comm", format!("{r_comm} must be >= 0")));
        }
        Ok(CommGraph {
            robot_count,
            r_comm,
            edges: BTreeSet::new(),
        })
    }

    pub fn robot_count(&self) -> usize {
        self.robot_count
    }

    pub fn r_comm(&self) -> f64 {
        self.r_comm
    }

    pub fn has_edge(&self, i: RobotId, j: RobotId) -> bool {
        self.edges.contains(&ordered(i, j))
    }

    pub fn edges(&self) -> impl Iterator<Item = (RobotId, RobotId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Re-evaluates every pair against the distance predicate and reports the
    /// edges that changed, in `(i, j)` order.
    pub fn update_edges(&mut self, poses: &[RobotPose]) -> Result<Vec<EdgeEvent>> {
        let positions = self.positions_by_id(poses)?;
        let mut events = Vec::new();
        for i in 0..self.robot_count {
            for j in (i + 1)..self.robot_count {
                let linked = positions[i].distance(positions[j]) < self.r_comm;
                let present = self.edges.contains(&(i, j));
                if linked && !present {
                    self.edges.insert((i, j));
                    events.push(EdgeEvent {
                        kind: EdgeEventKind::EdgeUp,
                        i,
                        j,
                    });
                } else if !linked && present {
                    self.edges.remove(&(i, j));
                    events.push(EdgeEvent {
                        kind: EdgeEventKind::EdgeDown,
                        i,
                        j,
                    });
                }
            }
        }
        Ok(events)
    }

    fn positions_by_id(&self, poses: &[RobotPose]) -> Result<Vec<Point>> {
        if poses.len() != self.robot_count {
            return Err(Error::RobotIds(format!(
                "{} poses for {} robots",
                poses.len(),
                self.robot_count
            )));
        }
        let mut out: Vec<Option<Point>> = vec![None; self.robot_count];
        for p in poses {
            let slot = out
                .get_mut(p.robot_id)
                .ok_or_else(|| Error::RobotIds(format!("robot id {} out of range", p.robot_id)))?;
            if slot.replace(p.position).is_some() {
                return Err(Error::RobotIds(format!(
                    "duplicate robot id {}",
                    p.robot_id
                )));
            }
        }
        Ok(out
            .into_iter()
            .map(|p| p.expect("every id seen once"))
            .collect())
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<RobotId>> {
        let mut label: Vec<usize> = (0..self.robot_count).collect();
        fn find(label: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while label[r] != r {
                r = label[r];
            }
            label[x] = r;
            r
        }
        for &(i, j) in &self.edges {
            let (a, b) = (find(&mut label, i), find(&mut label, j));
            if a != b {
                label[a.max(b)] = a.min(b);
            }
        }
        let mut comps: Vec<Vec<RobotId>> = Vec::new();
        let mut root_slot = vec![usize::MAX; self.robot_count];
        for r in 0..self.robot_count {
            let root = find(&mut label, r);
            if root_slot[root] == usize::MAX {
                root_slot[root] = comps.len();
                comps.push(Vec::new());
            }
            comps[root_slot[root]].push(r);
        }
        comps
    }
}

/// `M_i ← M_i ⊞ M_j` then `M_j ← M_j ⊞ M_i`; both maps end up equal.
/// Returns whether either map changed.
pub fn on_edge_up_merge(i: RobotId, j: RobotId, maps: &mut [OccupancyGrid]) -> Result<bool> {
    if i == j {
        return Ok(false);
    }
    if i >= maps.len() || j >= maps.len() {
        return Err(Error::RobotIds(format!(
            "edge ({i}, {j}) outside {} maps",
            maps.len()
        )));
    }
    let (lo, hi) = (i.min(j), i.max(j));
    let (head, tail) = maps.split_at_mut(hi);
    let (a, b) = (&mut head[lo], &mut tail[0]);
    let changed_a = a.join_from(b)?;
    let changed_b = b.join_from(a)?;
    Ok(changed_a || changed_b)
}

/// Merges along every present edge until no map changes. Returns the number
/// of passes that changed something.
pub fn merge_to_fixpoint(graph: &CommGraph, maps: &mut [OccupancyGrid]) -> Result<usize> {
    let mut passes = 0;
    loop {
        let mut changed = false;
        for (i, j) in graph.edges() {
            changed |= on_edge_up_merge(i, j, maps)?;
        }
        if !changed {
            return Ok(passes);
        }
        passes += 1;
    }
}
