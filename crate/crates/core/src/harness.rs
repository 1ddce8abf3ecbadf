//! Batches of seeded runs and their summary statistics.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comm::RobotPose;
use crate::engine::{run_on, RunRecord};
use crate::error::{Error, Result};
use crate::grid::{
    cluster_frontiers, detect_frontiers, CellState, FrontierClustering, GridCoord, OccupancyGrid,
    Point,
};
use crate::scenario::{PolicyKind, ScenarioConfig};
use crate::search::{Dijkstra, Passable};

/// Centroid nearest to `from` by wavefront distance, skipping centroids not in
/// `allowed`. Ties go to the earlier cluster.
pub fn greedy_goal(
    m: &OccupancyGrid,
    from: GridCoord,
    clustering: &FrontierClustering,
    allowed: Option<&[bool]>,
) -> Option<GridCoord> {
    if clustering.is_empty() || m.get(from) == CellState::Occupied {
        return None;
    }
    let mut wanted = vec![usize::MAX; m.len()];
    let mut remaining = 0;
    for (k, c) in clustering.clusters.iter().enumerate() {
        let i = m.index(c.centroid);
        if allowed.is_some_and(|a| !a[i]) || wanted[i] != usize::MAX {
            continue;
        }
        wanted[i] = k;
        remaining += 1;
    }
    let mut best: Option<(f64, usize)> = None;
    let mut dij = Dijkstra::new(m.len());
    dij.run(m, m.index(from), Passable::NotOccupied, None, |i, d| {
        if remaining == 0 || best.is_some_and(|(bd, _)| d > bd) {
            return false;
        }
        let k = wanted[i];
        if k != usize::MAX {
            remaining -= 1;
            if best.is_none_or(|(bd, bk)| d < bd || (d == bd && k < bk)) {
                best = Some((d, k));
            }
        }
        true
    });
    best.map(|(_, k)| clustering.clusters[k].centroid)
}

/// The greedy baseline: center of the nearest frontier centroid, or None when
/// the map has no frontier left.
pub fn greedy_frontier_policy(m: &OccupancyGrid, pose: &RobotPose) -> Option<Point> {
    let from = m.cell_at(pose.position)?;
    let clustering = cluster_frontiers(&detect_frontiers(m));
    greedy_goal(m, from, &clustering, None).map(|c| m.cell_center(c))
}

/// Standard deviation convention used by [`BatchStats`].
pub const SD_CONVENTION: &str = "population";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    /// Mean exploration time over successful rounds.
    pub t_bar: Option<f64>,
    pub sd_t: Option<f64>,
    /// `100 · sd_t / t_bar`, only with two or more successes.
    pub rsd_t: Option<f64>,
    pub r_success: f64,
    pub n_success: usize,
    pub n_total: usize,
}

impl BatchStats {
    /// Statistics over `(success, time)` pairs.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (bool, Option<f64>)>) -> Self {
        let mut n_total = 0;
        let mut times = Vec::new();
        for (ok, t) in outcomes {
            n_total += 1;
            if ok {
                if let Some(t) = t {
                    times.push(t);
                }
            }
        }
        let n = times.len();
        let (t_bar, sd_t) = if n == 0 {
            (None, None)
        } else {
            let mean = times.iter().sum::<f64>() / n as f64;
            let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64;
            (Some(mean), Some(var.sqrt()))
        };
        let rsd_t = match (t_bar, sd_t) {
            (Some(m), Some(s)) if n >= 2 && m > 0.0 => Some(100.0 * s / m),
            _ => None,
        };
        BatchStats {
            t_bar,
            sd_t,
            rsd_t,
            r_success: if n_total == 0 {
                0.0
            } else {
                100.0 * n as f64 / n_total as f64
            },
            n_success: n,
            n_total,
        }
    }

    pub fn from_rows(rows: &[BatchRow]) -> Self {
        Self::from_outcomes(rows.iter().map(|r| (r.success, r.time)))
    }
}

/// One line of `batch.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub seed: u64,
    pub policy: PolicyKind,
    pub r_comm: String,
    pub n_robots: usize,
    pub success: bool,
    /// Empty when the round failed.
    pub time: Option<f64>,
    pub final_coverage: f64,
}

impl BatchRow {
    pub fn from_record(rec: &RunRecord) -> Self {
        BatchRow {
            seed: rec.config.seed,
            policy: rec.config.policy,
            r_comm: rec.config.r_comm.to_string(),
            n_robots: rec.config.n_robots,
            success: rec.success,
            time: rec.time,
            final_coverage: rec.final_coverage,
        }
    }
}

pub struct BatchResult {
    pub stats: BatchStats,
    pub rows: Vec<BatchRow>,
    pub records: Vec<RunRecord>,
}

/// Runs one round per seed, in parallel, with `policy`. Rows come back in
/// seed-list order regardless of scheduling.
pub fn run_batch(
    scenario: &ScenarioConfig,
    rounds: usize,
    seeds: &[u64],
    policy: PolicyKind,
) -> Result<BatchResult> {
    if seeds.len() != rounds {
        return Err(Error::scenario(
            "rounds",
            format!("{} seeds for {rounds} rounds", seeds.len()),
        ));
    }
    let truth = scenario.load_world()?;
    let mut base = scenario.clone();
    base.policy = policy;
    base.validate(&truth)?;
    let records: Vec<RunRecord> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ScenarioConfig {
                seed,
                ..base.clone()
            };
            run_on(&cfg, &truth)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<BatchRow> = records.iter().map(BatchRow::from_record).collect();
    Ok(BatchResult {
        stats: BatchStats::from_rows(&rows),
        rows,
        records,
    })
}

/// Seeds `base, base + 1, …`.
pub fn seed_range(base: u64, rounds: usize) -> Vec<u64> {
    (0..rounds as u64).map(|k| base.wrapping_add(k)).collect()
}

pub fn batch_csv(rows: &[BatchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("batch.csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_batch_csv(text: &str) -> Result<Vec<BatchRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Contents of `stats.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub stats: BatchStats,
    pub sd_convention: String,
    pub rounds: usize,
    pub config: ScenarioConfig,
}

impl StatsFile {
    pub fn new(
        stats: BatchStats,
        rounds: usize,
        mut config: ScenarioConfig,
        world: &OccupancyGrid,
    ) -> Self {
        config.resolve(world);
        StatsFile {
            stats,
            sd_convention: SD_CONVENTION.into(),
            rounds,
            config,
        }
    }
}

/// Writes `batch.csv` and `stats.json` into `dir`.
pub fn write_batch(dir: &Path, result: &BatchResult, scenario: &ScenarioConfig) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("batch.csv");
    std::fs::write(&csv_path, batch_csv(&result.rows)?).map_err(|e| Error::io(&csv_path, e))?;
    let world = scenario.load_world()?;
    let file = StatsFile::new(
        result.stats.clone(),
        result.rows.len(),
        scenario.clone(),
        &world,
    );
    let json_path = dir.join("stats.json");
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-12)
    }

    #[test]
    fn identical_times_have_zero_rsd() {
        let s = BatchStats::from_outcomes(vec![(true, Some(50.0)); 5]);
        assert_eq!(s.rsd_t, Some(0.0));
        assert_eq!(s.r_success, 100.0);
    }

    #[test]
    fn two_rounds_by_hand() {
        let s = BatchStats::from_outcomes([(true, Some(90.0)), (true, Some(110.0))]);
        assert!(close(s.t_bar, 100.0));
        assert!(close(s.sd_t, 10.0));
        assert!(close(s.rsd_t, 10.0));
    }

    #[test]
    fn failures_count_only_in_success_rate() {
        let mut o = vec![(true, Some(100.0)); 18];
        o.extend([(false, None), (false, None)]);
        let s = BatchStats::from_outcomes(o);
        assert_eq!(s.r_success, 90.0);
        assert_eq!((s.n_success, s.n_total), (18, 20));
        assert!(close(s.t_bar, 100.0));

        let none = BatchStats::from_outcomes(vec![(false, None); 3]);
        assert_eq!((none.t_bar, none.rsd_t, none.r_success), (None, None, 0.0));
        let one = BatchStats::from_outcomes([(true, Some(4.0))]);
        assert_eq!(one.rsd_t, None);
    }

    #[test]
    fn csv_round_trip_reproduces_stats() {
        let rows = vec![
            BatchRow {
                seed: 1,
                policy: PolicyKind::Mef,
                r_comm: "inf".into(),
                n_robots: 3,
                success: true,
                time: Some(101.3),
                final_coverage: 0.991,
            },
            BatchRow {
                seed: 2,
                policy: PolicyKind::Mef,
                r_comm: "inf".into(),
                n_robots: 3,
                success: false,
                time: None,
                final_coverage: 0.5,
            },
        ];
        let text = batch_csv(&rows).unwrap();
        assert!(text.starts_with("seed,policy,r_comm,n_robots,success,time,final_coverage\n"));
        let back = read_batch_csv(&text).unwrap();
        assert_eq!(back, rows);
        assert_eq!(BatchStats::from_rows(&back), BatchStats::from_rows(&rows));
    }

    fn open(rows: usize, cols: usize) -> OccupancyGrid {
        OccupancyGrid::filled(rows, cols, 1.0, CellState::Free).unwrap()
    }

    #[test]
    fn greedy_picks_nearest_centroid() {
        // Unknown strips at columns 0 and 9; robot at column 3, so the left
        // frontier (column 1) is 2 m away and the right one (column 8) 5 m.
        let mut m = open(3, 10);
        for r in 0..3 {
            m.set(GridCoord::new(r, 0), CellState::Unknown);
            m.set(GridCoord::new(r, 9), CellState::Unknown);
        }
        let pose = RobotPose::new(0, m.cell_center(GridCoord::new(1, 3)));
        assert_eq!(
            greedy_frontier_policy(&m, &pose),
            Some(m.cell_center(GridCoord::new(1, 1)))
        );

        let mut one = open(3, 10);
        for r in 0..3 {
            one.set(GridCoord::new(r, 9), CellState::Unknown);
        }
        assert_eq!(
            greedy_frontier_policy(&one, &pose),
            Some(one.cell_center(GridCoord::new(1, 8)))
        );
        assert_eq!(greedy_frontier_policy(&open(3, 10), &pose), None);
    }
}
