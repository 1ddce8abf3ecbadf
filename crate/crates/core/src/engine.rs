//! Discrete-time multi-robot exploration.
//!
//! Each tick runs, in order: noise update, sensing, link update and map
//! merging, the coverage check, planning for robots whose goal is due, and
//! motion. Time `T` of a success is the end of the tick whose merged maps
//! first reached the threshold.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::comm::{merge_to_fixpoint, CommGraph, EdgeEventKind, RobotId, RobotPose};
use crate::error::{Error, Result};
use crate::field::{
    field_argmin, on_top_plateau, total_field_with, EntropyField, FieldParams, FieldWorkspace,
    NoiseState,
};
use crate::goal::{AssignTrigger, GoalState};
use crate::grid::{
    cluster_frontiers, detect_frontiers, CellState, OccupancyGrid, Point, ReachableSet,
};
use crate::harness::greedy_goal;
use crate::nav::{plan_path, reachable_free, step_motion, Path};
use crate::scenario::{PolicyKind, ScenarioConfig};
use crate::sense::sense;

/// One entry of the event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum Event {
    Edge {
        tick: u64,
        #[serde(rename = "type")]
        kind: EdgeEventKind,
        i: RobotId,
        j: RobotId,
    },
    Goal {
        tick: u64,
        time: f64,
        robot: RobotId,
        /// `[row, col]` of the goal cell.
        cell: [usize; 2],
        goal: Point,
        trigger: AssignTrigger,
        /// Seconds since the previous assignment (0 on bootstrap).
        elapsed: f64,
        /// Reference duration of the goal being replaced.
        prev_t_ref: f64,
        t_ref: f64,
        pos_pre: Point,
    },
    /// A link came up while at least one side had run out of frontiers.
    Rendezvous { tick: u64, i: RobotId, j: RobotId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Stuck,
    MaxTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Resolved scenario.
    pub config: ScenarioConfig,
    pub success: bool,
    pub outcome: Outcome,
    /// Exploration time `T` on success.
    pub time: Option<f64>,
    /// Simulated seconds when the run stopped.
    pub end_time: f64,
    pub ticks: u64,
    pub final_coverage: f64,
    /// Best robot coverage at the end of every tick.
    pub coverage_trace: Vec<f64>,
    pub events: Vec<Event>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Events as JSON lines.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn goal_events(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Goal { .. }))
    }
}

struct Robot {
    pose: RobotPose,
    goal: GoalState,
    path: Option<Path>,
    /// Last position that counted as movement, and when.
    anchor: Point,
    anchor_time: f64,
    /// Whether the last planning pass found no frontier cluster.
    starved: bool,
    /// Where the robot last sensed. Sensing again from the same point cannot
    /// change a map, so it is skipped.
    sensed_at: Option<Point>,
}

/// Step-level simulation state.
pub struct Simulation {
    cfg: ScenarioConfig,
    truth: OccupancyGrid,
    reachable: ReachableSet,
    params: FieldParams,
    maps: Vec<OccupancyGrid>,
    robots: Vec<Robot>,
    graph: CommGraph,
    noise: NoiseState,
    rng: ChaCha8Rng,
    workspace: FieldWorkspace,
    tick: u64,
    events: Vec<Event>,
    coverage_trace: Vec<f64>,
    rays: usize,
}

impl Simulation {
    /// Loads the scenario's world and validates everything.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let truth = cfg.load_world()?;
        Self::with_world(cfg, truth)
    }

    pub fn with_world(cfg: &ScenarioConfig, truth: OccupancyGrid) -> Result<Self> {
        let mut cfg = cfg.clone();
        cfg.resolve(&truth);
        let start_cells = cfg.validate(&truth)?;
        let res = truth.resolution();
        let params = cfg.field_params(res);
        let tolerance = cfg.arrival_tolerance.unwrap_or(2.0 * res);
        let robots = cfg
            .start_points()
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(Robot {
                    pose: RobotPose::new(i, p),
                    goal: GoalState::new(p, cfg.k_ref, cfg.v_max, tolerance)?,
                    path: None,
                    anchor: p,
                    anchor_time: 0.0,
                    starved: false,
                    sensed_at: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulation {
            reachable: ReachableSet::from_starts(&truth, &start_cells),
            maps: vec![truth.blank_like(); cfg.n_robots],
            graph: CommGraph::new(cfg.n_robots, cfg.r_comm.0)?,
            noise: NoiseState::zeros(cfg.n_robots),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            workspace: FieldWorkspace::new(truth.len()),
            rays: cfg.rays.expect("resolved"),
            params,
            robots,
            truth,
            cfg,
            tick: 0,
            events: Vec::new(),
            coverage_trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn truth(&self) -> &OccupancyGrid {
        &self.truth
    }

    /// Replaces a robot's local map, e.g. to script a scenario.
    pub fn set_map(&mut self, robot: RobotId, m: OccupancyGrid) -> Result<()> {
        self.truth.check_shape(&m)?;
        self.maps[robot] = m;
        self.robots[robot].sensed_at = None;
        Ok(())
    }

    pub fn map(&self, robot: RobotId) -> &OccupancyGrid {
        &self.maps[robot]
    }

    pub fn poses(&self) -> Vec<RobotPose> {
        self.robots.iter().map(|r| r.pose).collect()
    }

    pub fn goal_state(&self, robot: RobotId) -> &GoalState {
        &self.robots[robot].goal
    }

    pub fn graph(&self) -> &CommGraph {
        &self.graph
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Simulated seconds elapsed.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.cfg.dt
    }

    /// The full field `robot` would minimize right now, for inspection.
    pub fn field(&mut self, robot: RobotId) -> EntropyField {
        let m = &self.maps[robot];
        let clustering = cluster_frontiers(&detect_frontiers(m));
        let visible: Vec<RobotPose> = if self.cfg.share_positions {
            self.poses()
        } else {
            vec![self.robots[robot].pose]
        };
        total_field_with(
            &mut self.workspace,
            robot,
            m,
            &clustering,
            &visible,
            self.cfg.n_robots,
            &self.params,
            &self.noise.values,
        )
    }

    /// Coverage the success check uses: the best single map, or the union of
    /// all maps in merged-coverage mode.
    pub fn coverage(&self) -> f64 {
        if self.cfg.merged_coverage {
            self.reachable.union_coverage(&self.maps)
        } else {
            self.maps
                .iter()
                .map(|m| {
                    self.reachable
                        .coverage(m)
                        .expect("maps share the truth shape")
                })
                .fold(0.0, f64::max)
        }
    }

    /// Advances one tick. Returns the outcome once the run is over; callers
    /// scripting open-ended scenarios may keep stepping regardless.
    pub fn step(&mut self) -> Result<Option<Outcome>> {
        let now = self.time();
        let end = (self.tick + 1) as f64 * self.cfg.dt;
        self.noise
            .advance(&mut self.rng, self.params.alpha, self.params.sigma_d);

        for (r, m) in self.robots.iter_mut().zip(self.maps.iter_mut()) {
            if r.sensed_at != Some(r.pose.position) {
                sense(r.pose.position, &self.truth, m, self.cfg.d_s, self.rays);
                r.sensed_at = Some(r.pose.position);
            }
        }

        let poses = self.poses();
        for e in self.graph.update_edges(&poses)? {
            self.events.push(Event::Edge {
                tick: self.tick,
                kind: e.kind,
                i: e.i,
                j: e.j,
            });
            if e.kind == EdgeEventKind::EdgeUp
                && (self.robots[e.i].starved || self.robots[e.j].starved)
            {
                self.events.push(Event::Rendezvous {
                    tick: self.tick,
                    i: e.i,
                    j: e.j,
                });
            }
        }
        merge_to_fixpoint(&self.graph, &mut self.maps)?;

        let coverage = self.coverage();
        self.coverage_trace.push(coverage);
        if coverage >= self.cfg.coverage_threshold {
            self.tick += 1;
            return Ok(Some(Outcome::Success));
        }

        for i in 0..self.robots.len() {
            self.plan(i, now)?;
        }

        for r in &mut self.robots {
            if let Some(path) = r.path.as_mut() {
                r.pose = step_motion(&r.pose, path, self.cfg.v_max, self.cfg.dt);
            }
            if r.pose.position.distance(r.anchor) >= self.truth.resolution() {
                r.anchor = r.pose.position;
                r.anchor_time = end;
            }
        }

        self.tick += 1;
        let idle = self
            .robots
            .iter()
            .map(|r| end - r.anchor_time)
            .fold(f64::INFINITY, f64::min);
        if idle >= self.cfg.stuck_timeout {
            return Ok(Some(Outcome::Stuck));
        }
        if end >= self.cfg.max_sim_time {
            return Ok(Some(Outcome::MaxTime));
        }
        Ok(None)
    }

    fn plan(&mut self, i: RobotId, now: f64) -> Result<()> {
        let pos = self.robots[i].pose.position;
        let m = &self.maps[i];
        if let Some(trigger) = self.robots[i].goal.due(pos, now) {
            let Some(here) = m.cell_at(pos) else {
                return Err(Error::RobotIds(format!("robot {i} left the map")));
            };
            let allowed = reachable_free(m, here);
            let clustering = cluster_frontiers(&detect_frontiers(m));
            self.robots[i].starved = clustering.is_empty();
            let cell = match self.cfg.policy {
                PolicyKind::Mef => {
                    let visible: Vec<RobotPose> = if self.cfg.share_positions {
                        self.poses()
                    } else {
                        vec![self.robots[i].pose]
                    };
                    // A goal still tied for the strongest frontier pull is
                    // kept on timeout. Otherwise the robot term, which favors
                    // whichever tied goal is farther away, flips the choice
                    // every time the robot closes in on one of them.
                    let keep = (trigger == AssignTrigger::Timeout)
                        .then_some(self.robots[i].goal.g_cur)
                        .flatten()
                        .and_then(|g| m.cell_at(g))
                        .filter(|&g| {
                            allowed[m.index(g)]
                                && on_top_plateau(
                                    &mut self.workspace,
                                    m,
                                    &clustering,
                                    self.cfg.n_robots,
                                    &self.params,
                                    g,
                                )
                        });
                    keep.or_else(|| {
                        field_argmin(
                            &mut self.workspace,
                            i,
                            m,
                            &clustering,
                            &visible,
                            self.cfg.n_robots,
                            &self.params,
                            &self.noise.values,
                            Some(&allowed),
                        )
                    })
                }
                PolicyKind::Greedy => greedy_goal(m, here, &clustering, Some(&allowed)),
            };
            if let Some(cell) = cell {
                let target = m.cell_center(cell);
                let r = &mut self.robots[i];
                let (prev_at, prev_t_ref) = (r.goal.assigned_at, r.goal.t_ref);
                let bootstrap = r.goal.g_cur.is_none();
                if r.goal.maybe_assign(pos, now, target).is_some() {
                    debug_assert_eq!(r.goal.g_cur, Some(target));
                    self.events.push(Event::Goal {
                        tick: self.tick,
                        time: now,
                        robot: i,
                        cell: [cell.row, cell.col],
                        goal: target,
                        trigger,
                        elapsed: if bootstrap { 0.0 } else { now - prev_at },
                        prev_t_ref: if bootstrap { 0.0 } else { prev_t_ref },
                        t_ref: r.goal.t_ref,
                        pos_pre: pos,
                    });
                    r.path = plan_path(m, pos, target);
                    if r.path.is_none() {
                        r.goal.drop_goal();
                    }
                }
                return Ok(());
            }
            // Nothing to aim for: hold position until a peer or new frontier
            // shows up.
            let r = &mut self.robots[i];
            r.goal.drop_goal();
            r.path = None;
            return Ok(());
        }
        let r = &mut self.robots[i];
        let stale = r.path.as_ref().is_none_or(|p| !p.is_valid(m));
        if stale {
            if let Some(g) = r.goal.g_cur {
                r.path = plan_path(m, pos, g);
                if r.path.is_none() {
                    r.goal.drop_goal();
                }
            }
        }
        Ok(())
    }

    /// Runs to completion.
    pub fn run_to_end(mut self) -> Result<RunRecord> {
        let outcome = loop {
            if let Some(o) = self.step()? {
                break o;
            }
        };
        Ok(self.into_record(outcome))
    }

    pub fn into_record(self, outcome: Outcome) -> RunRecord {
        let end_time = self.time();
        RunRecord {
            final_coverage: self.coverage(),
            success: outcome == Outcome::Success,
            time: (outcome == Outcome::Success).then_some(end_time),
            outcome,
            end_time,
            ticks: self.tick,
            coverage_trace: self.coverage_trace,
            events: self.events,
            config: self.cfg,
        }
    }
}

/// Runs one scenario from start to finish.
pub fn run(cfg: &ScenarioConfig) -> Result<RunRecord> {
    Simulation::new(cfg)?.run_to_end()
}

/// Like [`run`] with an already loaded world.
pub fn run_on(cfg: &ScenarioConfig, truth: &OccupancyGrid) -> Result<RunRecord> {
    Simulation::with_world(cfg, truth.clone())?.run_to_end()
}

/// Whether `robot`'s position cell is Free in ground truth.
pub fn on_free_cell(truth: &OccupancyGrid, p: Point) -> bool {
    truth
        .cell_at(p)
        .is_some_and(|c| truth.get(c) == CellState::Free)
}
