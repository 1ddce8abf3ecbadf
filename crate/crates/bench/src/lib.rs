//! Shared fixtures for the benchmarks: the bundled maze partway through an
//! exploration.

use fieldex::scenario::bundled_maze_starts;
use fieldex::sense::auto_ray_count;
use fieldex::{bundled_maze, sense, OccupancyGrid, Point, RobotPose, ScenarioConfig};

pub const D_S: f64 = 7.0;

pub struct Snapshot {
    pub truth: OccupancyGrid,
    /// Two robot maps that have explored different halves of the corridor.
    pub maps: [OccupancyGrid; 2],
    pub poses: Vec<RobotPose>,
    pub config: ScenarioConfig,
}

pub fn snapshot() -> Snapshot {
    let truth = bundled_maze();
    let rays = auto_ray_count(D_S, truth.resolution());
    let scan = |stops: &[(f64, f64)]| {
        let mut m = truth.blank_like();
        for &(x, y) in stops {
            sense(Point::new(x, y), &truth, &mut m, D_S, rays);
        }
        m
    };
    let maps = [
        scan(&[(1.0, 5.5), (2.2, 3.0), (5.0, 5.5)]),
        scan(&[(12.0, 5.5), (11.4, 8.0), (16.0, 5.5)]),
    ];
    let poses = bundled_maze_starts()
        .into_iter()
        .take(3)
        .enumerate()
        .map(|(i, [x, y])| RobotPose::new(i, Point::new(x + 2.0 * i as f64, y)))
        .collect();
    let mut config = ScenarioConfig::bundled_maze(3, fieldex::Range(4.0), 0);
    config.resolve(&truth);
    Snapshot {
        truth,
        maps,
        poses,
        config,
    }
}
