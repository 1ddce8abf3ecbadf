//! Multi-robot frontier exploration with entropy fields.
//!
//! Robots share positions at all times but exchange maps only while within
//! communication range. Each robot picks goals by minimizing a field that
//! pulls it toward large frontier clusters and toward the edge of its peers'
//! sensor range, so robots that run out of frontiers drift back into contact.
//!
//! ```no_run
//! use fieldex::{run, Range, ScenarioConfig};
//!
//! let cfg = ScenarioConfig::bundled_maze(3, Range(4.0), 7);
//! let record = run(&cfg).unwrap();
//! println!("success={} T={:?}", record.success, record.time);
//! ```

pub mod comm;
pub mod engine;
pub mod error;
pub mod field;
pub mod goal;
pub mod grid;
pub mod harness;
pub mod mapfile;
pub mod nav;
pub mod scenario;
mod search;
pub mod sense;

pub use comm::{
    merge_to_fixpoint, on_edge_up_merge, CommGraph, EdgeEvent, EdgeEventKind, RobotId, RobotPose,
};
pub use engine::{run, run_on, Event, Outcome, RunRecord, Simulation};
pub use error::{Error, Result};
pub use field::{
    frontier_entropy, frontier_entropy_value, robot_entropy, robot_entropy_term, total_field,
    wavefront_distance, EntropyField, FieldParams, FrontierAggregate, NoiseState,
    WavefrontDistanceMap,
};
pub use goal::{reference_duration, select_new_goal, AssignTrigger, GoalState};
pub use grid::{
    cluster_frontiers, coverage_fraction, detect_frontiers, merge, CellState, FrontierCluster,
    FrontierClustering, GridCoord, OccupancyGrid, Point, ReachableSet,
};
pub use harness::{greedy_frontier_policy, run_batch, BatchRow, BatchStats};
pub use mapfile::{format_map, load_map, parse_map};
pub use nav::{plan_path, step_motion, Path};
pub use scenario::{bundled_maze, PolicyKind, Range, ScenarioConfig};
pub use sense::sense;
