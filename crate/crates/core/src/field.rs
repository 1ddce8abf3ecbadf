//! Frontier and robot entropies and the total field a robot minimizes to
//! pick its next goal.
//!
//! Both terms are non-positive (noise aside), so lower values attract:
//!
//! * frontier term at cell `p` for a cluster with centroid `q`:
//!   `-(k_f(N_r) · C_q / max(d*(p, q), ε_d)) · ln(N_C · C_q)`, where `d*` is
//!   the obstacle-aware wavefront distance;
//! * robot term, summed over every robot `n` whose position is visible and
//!   within sensor range `d_s` of `p`:
//!   `k_r · σ_r · N_r · ln(N_r) / min(d(n, p) - d_s, -ε_d) + χ_n`.
//!
//! Logarithms are natural. The frontier term of a cell is taken from its most
//! attractive cluster unless [`FrontierAggregate::Sum`] is selected.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::comm::{RobotId, RobotPose};
use crate::error::{Error, Result};
use crate::grid::{
    CellState, FrontierCluster, FrontierClustering, GridCoord, OccupancyGrid, Point,
};
use crate::search::{Dijkstra, Passable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontierAggregate {
    /// Each cell takes the value of its most attractive centroid.
    #[default]
    Min,
    /// Each cell sums the contributions of all centroids.
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    /// `k_f(N_r) = k_f_base^(N_r - 3)`.
    pub k_f_base: f64,
    pub k_r: f64,
    /// Relaxation distance, meters.
    pub sigma_r: f64,
    /// Noise color exponent.
    pub alpha: f64,
    /// Noise standard deviation.
    pub sigma_d: f64,
    /// Sensor range, meters.
    pub d_s: f64,
    /// Lower clamp on both denominators, meters.
    pub epsilon_d: f64,
    pub aggregate: FrontierAggregate,
}

impl FieldParams {
    /// Standard parameter set for a given sensor range and map resolution.
    pub fn standard(d_s: f64, resolution: f64) -> Self {
        FieldParams {
            k_f_base: 2.0,
            k_r: 1.0,
            sigma_r: 0.6,
            alpha: 2.0,
            sigma_d: 0.035,
            d_s,
            epsilon_d: resolution,
            aggregate: FrontierAggregate::Min,
        }
    }

    pub fn k_f(&self, n_robots: usize) -> f64 {
        self.k_f_base.powi(n_robots as i32 - 3)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_f_base", self.k_f_base),
            ("k_r", self.k_r),
            ("sigma_r", self.sigma_r),
            ("d_s", self.d_s),
            ("epsilon_d", self.epsilon_d),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::scenario(name, format!("{v} must be > 0")));
            }
        }
        if !(self.sigma_d.is_finite() && self.sigma_d >= 0.0) {
            return Err(Error::scenario(
                "sigma_d",
                format!("{} must be >= 0", self.sigma_d),
            ));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::scenario(
                "alpha",
                format!("{} must be >= 0", self.alpha),
            ));
        }
        Ok(())
    }
}

/// Wavefront distances from one centroid; infinite where unreachable.
#[derive(Clone, Debug)]
pub struct WavefrontDistanceMap {
    pub source: GridCoord,
    cols: usize,
    dist: Vec<f64>,
}

impl WavefrontDistanceMap {
    pub fn get(&self, c: GridCoord) -> f64 {
        self.dist[c.row * self.cols + c.col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }
}

/// Shortest 8-connected distance from `source` through non-Occupied cells;
/// axial steps cost one resolution and diagonal steps `√2` of it.
pub fn wavefront_distance(m: &OccupancyGrid, source: GridCoord) -> Result<WavefrontDistanceMap> {
    if !m.contains(source) {
        return Err(Error::InvalidGrid(format!("source {source} outside grid")));
    }
    if m.get(source) == CellState::Occupied {
        return Err(Error::OccupiedSource(source));
    }
    let mut dij = Dijkstra::new(m.len());
    let mut dist = vec![f64::INFINITY; m.len()];
    dij.run(m, m.index(source), Passable::NotOccupied, None, |i, d| {
        dist[i] = d;
        true
    });
    Ok(WavefrontDistanceMap {
        source,
        cols: m.cols(),
        dist,
    })
}

/// Closed form of the frontier entropy. `c_q` and `n_c` are real-valued so the
/// vanishing-frontier limit can be probed; an infinite distance contributes 0.
pub fn frontier_entropy_value(k_f: f64, c_q: f64, n_c: f64, d_star: f64, epsilon_d: f64) -> f64 {
    if !d_star.is_finite() {
        return 0.0;
    }
    -(k_f * c_q / d_star.max(epsilon_d)) * (n_c * c_q).ln()
}

/// Frontier entropy of cluster `q` at cell `p`.
pub fn frontier_entropy(
    p: GridCoord,
    q: &FrontierCluster,
    clustering: &FrontierClustering,
    n_robots: usize,
    d_star: &WavefrontDistanceMap,
    params: &FieldParams,
) -> f64 {
    frontier_entropy_value(
        params.k_f(n_robots),
        q.size() as f64,
        clustering.len() as f64,
        d_star.get(p),
        params.epsilon_d,
    )
}

/// One robot's noise-free contribution at distance `d_cur`, or None when out
/// of sensor range.
pub fn robot_entropy_term(d_cur: f64, n_robots: usize, params: &FieldParams) -> Option<f64> {
    if d_cur < params.d_s {
        let n = n_robots as f64;
        let denom = (d_cur - params.d_s).min(-params.epsilon_d);
        Some(params.k_r * params.sigma_r * n / denom * n.ln())
    } else {
        None
    }
}

/// Robot entropy at point `p` from every visible pose. `noise` is indexed by
/// robot id.
pub fn robot_entropy(
    p: Point,
    poses: &[RobotPose],
    n_robots: usize,
    params: &FieldParams,
    noise: &[f64],
) -> f64 {
    poses
        .iter()
        .filter_map(|pose| {
            robot_entropy_term(pose.position.distance(p), n_robots, params)
                .map(|t| t + noise.get(pose.robot_id).copied().unwrap_or(0.0))
        })
        .sum()
}

/// Per-robot colored-noise scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseState {
    pub values: Vec<f64>,
}

impl NoiseState {
    pub fn zeros(n_robots: usize) -> Self {
        NoiseState {
            values: vec![0.0; n_robots],
        }
    }

    /// One step of every robot's noise process.
    ///
    /// `alpha >= 2` is an integrated-white walk `x + N(0, σ_d)` clamped to
    /// `±10 σ_d`; `alpha = 0` is white noise `N(0, σ_d)`. In between, an AR(1)
    /// process with coefficient `alpha / 2` interpolates the two.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R, alpha: f64, sigma_d: f64) {
        if sigma_d == 0.0 {
            self.values.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let normal = Normal::new(0.0, sigma_d).expect("sigma_d validated finite and >= 0");
        let bound = 10.0 * sigma_d;
        let rho = (alpha / 2.0).clamp(0.0, 1.0);
        for v in &mut self.values {
            let n = normal.sample(rng);
            *v = if rho >= 1.0 {
                (*v + n).clamp(-bound, bound)
            } else {
                rho * *v + (1.0 - rho * rho).sqrt() * n
            };
        }
    }
}

/// One robot's field over its local map. Values are NaN on non-Free cells.
#[derive(Clone, Debug)]
pub struct EntropyField {
    pub owner: RobotId,
    pub rows: usize,
    pub cols: usize,
    pub h_f: Vec<f64>,
    pub h_r: Vec<f64>,
    pub h_total: Vec<f64>,
    /// Free cells influenced by at least one term (a reachable centroid or a
    /// robot in range). Unsupported Free cells hold 0.
    pub support: Vec<bool>,
}

impl EntropyField {
    pub fn value(&self, c: GridCoord) -> f64 {
        self.h_total[c.row * self.cols + c.col]
    }

    pub fn is_empty(&self) -> bool {
        !self.support.iter().any(|&s| s)
    }

    /// `h_total` as CSV rows; non-Free cells are left blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.h_total.chunks(self.cols) {
            let line: Vec<String> = row
                .iter()
                .map(|v| {
                    if v.is_nan() {
                        String::new()
                    } else {
                        format!("{v}")
                    }
                })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Reusable buffers for computing fields on one map shape.
pub struct FieldWorkspace {
    dij: Dijkstra,
    best: Vec<f64>,
}

impl FieldWorkspace {
    pub fn new(len: usize) -> Self {
        FieldWorkspace {
            dij: Dijkstra::new(len),
            best: vec![f64::NEG_INFINITY; len],
        }
    }
}

/// Total field of `robot` over its map `m`.
///
/// `poses` holds the positions this robot can see (all robots when positions
/// are shared, else only its own); `n_robots` is the team size `N_r`.
pub fn total_field(
    robot: RobotId,
    m: &OccupancyGrid,
    clustering: &FrontierClustering,
    poses: &[RobotPose],
    n_robots: usize,
    params: &FieldParams,
    noise: &[f64],
) -> EntropyField {
    let mut ws = FieldWorkspace::new(m.len());
    total_field_with(
        &mut ws, robot, m, clustering, poses, n_robots, params, noise,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn total_field_with(
    ws: &mut FieldWorkspace,
    robot: RobotId,
    m: &OccupancyGrid,
    clustering: &FrontierClustering,
    poses: &[RobotPose],
    n_robots: usize,
    params: &FieldParams,
    noise: &[f64],
) -> EntropyField {
    let len = m.len();
    let mut support = vec![false; len];
    let h_f = match params.aggregate {
        FrontierAggregate::Min => frontier_min(ws, m, clustering, n_robots, params, &mut support),
        FrontierAggregate::Sum => frontier_sum(ws, m, clustering, n_robots, params, &mut support),
    };
    let h_r = robot_field(m, poses, n_robots, params, noise, &mut support);

    let mut h_total = vec![f64::NAN; len];
    let mut hf_out = vec![f64::NAN; len];
    let mut hr_out = vec![f64::NAN; len];
    for i in 0..len {
        if m.at(i) == CellState::Free {
            let (f, r) = if support[i] {
                (h_f[i], h_r[i])
            } else {
                (0.0, 0.0)
            };
            hf_out[i] = f;
            hr_out[i] = r;
            h_total[i] = f + r;
        } else {
            support[i] = false;
        }
    }
    EntropyField {
        owner: robot,
        rows: m.rows(),
        cols: m.cols(),
        h_f: hf_out,
        h_r: hr_out,
        h_total,
        support,
    }
}

/// Per-cell weights `k_f · C_q · ln(N_C · C_q)` paired with the centroid index.
fn cluster_weights(
    m: &OccupancyGrid,
    clustering: &FrontierClustering,
    n_robots: usize,
    params: &FieldParams,
) -> Vec<(f64, usize)> {
    let k_f = params.k_f(n_robots);
    let n_c = clustering.len() as f64;
    clustering
        .clusters
        .iter()
        .filter(|c| m.get(c.centroid) != CellState::Occupied)
        .map(|c| {
            let cq = c.size() as f64;
            (k_f * cq * (n_c * cq).ln(), m.index(c.centroid))
        })
        .collect()
}

/// Most attractive centroid per cell.
///
/// Centroids run in decreasing weight order, and a search stops expanding
/// through a cell (at least `ε_d` from its source) where an earlier centroid
/// already attracts at least as strongly. With `w_q ≤ w_r` and
/// `w_q / d_q ≤ w_r / d_r` at that cell, adding any further path length `a`
/// keeps `w_q / (d_q + a) ≤ w_r / (d_r + a)`, so the pruned region can never be
/// won by the later centroid and the per-cell maximum is exact.
fn frontier_min(
    ws: &mut FieldWorkspace,
    m: &OccupancyGrid,
    clustering: &FrontierClustering,
    n_robots: usize,
    params: &FieldParams,
    support: &mut [bool],
) -> Vec<f64> {
    let mut weights = cluster_weights(m, clustering, n_robots, params);
    weights.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let eps = params.epsilon_d;
    let best = &mut ws.best;
    best.iter_mut().for_each(|b| *b = f64::NEG_INFINITY);

    for &(w, src) in &weights {
        ws.dij.run(m, src, Passable::NotOccupied, None, |i, d| {
            let ratio = w / d.max(eps);
            if d >= eps && best[i] >= ratio {
                return false;
            }
            if ratio > best[i] {
                best[i] = ratio;
            }
            support[i] = true;
            true
        });
    }
    best.iter()
        .map(|&b| if b == f64::NEG_INFINITY { 0.0 } else { -b })
        .collect()
}

fn frontier_sum(
    ws: &mut FieldWorkspace,
    m: &OccupancyGrid,
    clustering: &FrontierClustering,
    n_robots: usize,
    params: &FieldParams,
    support: &mut [bool],
) -> Vec<f64> {
    let weights = cluster_weights(m, clustering, n_robots, params);
    let eps = params.epsilon_d;
    let mut acc = vec![0.0; m.len()];
    for &(w, src) in &weights {
        ws.dij.run(m, src, Passable::NotOccupied, None, |i, d| {
            acc[i] -= w / d.max(eps);
            support[i] = true;
            true
        });
    }
    acc
}

/// The cell [`select_goal_cell`](crate::goal::select_goal_cell) would pick on
/// the full field (up to last-bit ties), found without filling in the whole
/// field.
///
/// The robot term is bounded below, so a cell can only win where the frontier
/// term comes within that bound of a known upper bound on the minimum. Under
/// the min aggregate that region is a few cells around the heaviest centroids;
/// everything else is skipped. Falls back to the full field otherwise.
#[allow(clippy::too_many_arguments)]
pub fn field_argmin(
    ws: &mut FieldWorkspace,
    robot: RobotId,
    m: &OccupancyGrid,
    clustering: &FrontierClustering,
    poses: &[RobotPose],
    n_robots: usize,
    params: &FieldParams,
    noise: &[f64],
    allowed: Option<&[bool]>,
) -> Option<GridCoord> {
    let eps = params.epsilon_d;
    let ok = |i: usize| m.at(i) == CellState::Free && allowed.is_none_or(|a| a[i]);
    let mut weights = cluster_weights(m, clustering, n_robots, params);
    weights.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    // Upper bound: a reachable centroid's total is at most -w/ε plus its robot term.
    let ub = weights
        .iter()
        .filter(|&&(_, c)| ok(c))
        .map(|&(w, c)| -(w / eps) + robot_term_at(m, c, poses, n_robots, params, noise))
        .fold(f64::INFINITY, f64::min);
    let edge = params.k_r * params.sigma_r * n_robots as f64 / -eps * (n_robots as f64).ln();
    let lb_r: f64 = poses
        .iter()
        .map(|p| (edge + noise.get(p.robot_id).copied().unwrap_or(0.0)).min(0.0))
        .sum();
    let threshold = lb_r - ub;
    let slack = 1e-9 * (1.0 + ub.abs() + lb_r.abs());
    let threshold = threshold - slack;
    if params.aggregate != FrontierAggregate::Min || !threshold.is_finite() || threshold <= 0.0 {
        let field = total_field_with(ws, robot, m, clustering, poses, n_robots, params, noise);
        return crate::goal::select_goal_cell(&field, m, allowed);
    }

    // A cell can only win if some centroid attracts it at least `threshold`.
    let best = &mut ws.best;
    best.iter_mut().for_each(|b| *b = f64::NEG_INFINITY);
    let mut touched: Vec<usize> = Vec::new();
    for &(w, src) in &weights {
        ws.dij.run(m, src, Passable::NotOccupied, None, |i, d| {
            let ratio = w / d.max(eps);
            if d >= eps && (ratio < threshold || best[i] >= ratio) {
                return false;
            }
            if best[i] == f64::NEG_INFINITY {
                touched.push(i);
            }
            if ratio > best[i] {
                best[i] = ratio;
            }
            true
        });
    }
    touched.sort_unstable();
    let mut pick: Option<(usize, f64)> = None;
    for &i in &touched {
        let b = best[i];
        if b < threshold || !ok(i) {
            continue;
        }
        let v = -b + robot_term_at(m, i, poses, n_robots, params, noise);
        if pick.is_none_or(|(_, pv)| v < pv) {
            pick = Some((i, v));
        }
    }
    pick.map(|(i, _)| m.coord(i))
}

/// Whether `cell` lies within `ε_d` (wavefront) of a heaviest centroid, where
/// the frontier term takes its global minimum. Always false under the sum
/// aggregate.
pub fn on_top_plateau(
    ws: &mut FieldWorkspace,
    m: &OccupancyGrid,
    clustering: &FrontierClustering,
    n_robots: usize,
    params: &FieldParams,
    cell: GridCoord,
) -> bool {
    if params.aggregate != FrontierAggregate::Min || !m.contains(cell) {
        return false;
    }
    let weights = cluster_weights(m, clustering, n_robots, params);
    let Some(top) = weights.iter().map(|w| w.0).reduce(f64::max) else {
        return false;
    };
    let target = m.index(cell);
    let eps = params.epsilon_d;
    let mut hit = false;
    for &(w, src) in &weights {
        if w != top || hit {
            continue;
        }
        ws.dij
            .run(m, src, Passable::NotOccupied, Some(target), |i, d| {
                if d > eps {
                    return false;
                }
                hit |= i == target;
                true
            });
    }
    hit
}

/// Robot term at one cell, summed in the same order as the full field.
fn robot_term_at(
    m: &OccupancyGrid,
    i: usize,
    poses: &[RobotPose],
    n_robots: usize,
    params: &FieldParams,
    noise: &[f64],
) -> f64 {
    let center = m.cell_center(m.coord(i));
    let mut acc = 0.0;
    for pose in poses {
        if let Some(t) = robot_entropy_term(pose.position.distance(center), n_robots, params) {
            acc += t + noise.get(pose.robot_id).copied().unwrap_or(0.0);
        }
    }
    acc
}

fn robot_field(
    m: &OccupancyGrid,
    poses: &[RobotPose],
    n_robots: usize,
    params: &FieldParams,
    noise: &[f64],
    support: &mut [bool],
) -> Vec<f64> {
    let mut acc = vec![0.0; m.len()];
    let res = m.resolution();
    let reach = (params.d_s / res).ceil() as isize + 1;
    for pose in poses {
        let chi = noise.get(pose.robot_id).copied().unwrap_or(0.0);
        let (cr, cc) = (
            (pose.position.y / res).floor() as isize,
            (pose.position.x / res).floor() as isize,
        );
        let r0 = (cr - reach).max(0) as usize;
        let r1 = ((cr + reach).max(-1) + 1).min(m.rows() as isize).max(0) as usize;
        let c0 = (cc - reach).max(0) as usize;
        let c1 = ((cc + reach).max(-1) + 1).min(m.cols() as isize).max(0) as usize;
        for r in r0..r1 {
            for c in c0..c1 {
                let g = GridCoord::new(r, c);
                let i = m.index(g);
                if m.at(i) != CellState::Free {
                    continue;
                }
                let d = pose.position.distance(m.cell_center(g));
                if let Some(t) = robot_entropy_term(d, n_robots, params) {
                    acc[i] += t + chi;
                    support[i] = true;
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cluster_frontiers, detect_frontiers};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> FieldParams {
        let mut p = FieldParams::standard(7.0, 0.05);
        p.sigma_d = 0.0;
        p
    }

    #[test]
    fn frontier_golden_value() {
        // -(1 · 10 / 5) · ln 20
        let v = frontier_entropy_value(1.0, 10.0, 2.0, 5.0, 0.05);
        assert!((v - (-5.991464547107982)).abs() < 1e-12, "{v}");
        assert_eq!(frontier_entropy_value(1.0, 1.0, 1.0, 3.0, 0.05), 0.0);
        assert_eq!(
            frontier_entropy_value(1.0, 5.0, 3.0, f64::INFINITY, 0.05),
            0.0
        );
    }

    #[test]
    fn k_f_doubles_per_robot() {
        let p = params();
        assert_eq!(p.k_f(3), 1.0);
        assert_eq!(p.k_f(4), 2.0);
        assert_eq!(p.k_f(2), 0.5);
        let a = frontier_entropy_value(p.k_f(3), 10.0, 2.0, 5.0, 0.05);
        let b = frontier_entropy_value(p.k_f(4), 10.0, 2.0, 5.0, 0.05);
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn robot_golden_value() {
        // (1.8 / (3 - 7)) · ln 3
        let t = robot_entropy_term(3.0, 3, &params()).unwrap();
        assert!((t - (-0.4943755299006494)).abs() < 1e-12, "{t}");
        assert_eq!(robot_entropy_term(7.0, 3, &params()), None);
        assert_eq!(robot_entropy_term(3.0, 1, &params()), Some(-0.0));
        // clamped near the sensor edge
        let edge = robot_entropy_term(6.99, 3, &params()).unwrap();
        assert!((edge - 1.8 / -0.05 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn robot_entropy_outside_range_is_zero() {
        let poses = [RobotPose::new(0, Point::new(0.0, 0.0))];
        assert_eq!(
            robot_entropy(Point::new(10.0, 0.0), &poses, 3, &params(), &[0.3]),
            0.0
        );
        let inside = robot_entropy(Point::new(3.0, 0.0), &poses, 3, &params(), &[0.25]);
        assert!((inside - (-0.4943755299006494 + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn vanishing_frontier_limit() {
        // Two robots, so k_f = 1/2; at k_f = 1 the second case is 1.38e-5.
        let k_f = params().k_f(2);
        for (cq, bound) in [(1e-3, 1e-2), (1e-6, 1e-5)] {
            let v = frontier_entropy_value(k_f, cq, 1.0, 1.0, 0.05);
            assert!(v.abs() < bound, "C_q={cq}: {v}");
        }
        let shrinking: Vec<f64> = (1..12)
            .map(|e| frontier_entropy_value(1.0, 10f64.powi(-e), 1.0, 1.0, 0.05).abs())
            .collect();
        assert!(shrinking.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn wavefront_examples() {
        let m = OccupancyGrid::filled(1, 6, 0.05, CellState::Free).unwrap();
        let w = wavefront_distance(&m, GridCoord::new(0, 0)).unwrap();
        assert_eq!(w.get(GridCoord::new(0, 0)), 0.0);
        assert!((w.get(GridCoord::new(0, 4)) - 0.20).abs() < 1e-12);

        let mut walled = OccupancyGrid::filled(3, 5, 0.05, CellState::Free).unwrap();
        for r in 0..3 {
            walled.set(GridCoord::new(r, 2), CellState::Occupied);
        }
        let w = wavefront_distance(&walled, GridCoord::new(1, 0)).unwrap();
        assert_eq!(w.get(GridCoord::new(1, 4)), f64::INFINITY);
        assert_eq!(w.get(GridCoord::new(1, 2)), f64::INFINITY);
        assert!(matches!(
            wavefront_distance(&walled, GridCoord::new(0, 2)),
            Err(Error::OccupiedSource(_))
        ));
    }

    #[test]
    fn wavefront_passes_unknown() {
        let mut m = OccupancyGrid::unknown(1, 4, 0.1).unwrap();
        m.set(GridCoord::new(0, 0), CellState::Free);
        let w = wavefront_distance(&m, GridCoord::new(0, 0)).unwrap();
        assert!((w.get(GridCoord::new(0, 3)) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_clusters_field_is_robot_term() {
        let m = OccupancyGrid::filled(20, 20, 0.5, CellState::Free).unwrap();
        let poses = [
            RobotPose::new(0, Point::new(2.0, 2.0)),
            RobotPose::new(1, Point::new(6.0, 6.0)),
        ];
        let f = total_field(
            0,
            &m,
            &FrontierClustering::default(),
            &poses,
            2,
            &params(),
            &[0.0, 0.0],
        );
        for i in 0..m.len() {
            assert_eq!(f.h_f[i], 0.0);
            assert_eq!(f.h_total[i], f.h_r[i]);
        }
    }

    #[test]
    fn top_plateau_is_the_heaviest_centroid() {
        // Unknown columns at both ends; the left one is longer.
        let strips = |right: usize| {
            let mut m = OccupancyGrid::filled(10, 30, 1.0, CellState::Free).unwrap();
            for r in 0..10 {
                m.set(GridCoord::new(r, 0), CellState::Unknown);
            }
            for r in 0..right {
                m.set(GridCoord::new(r, 29), CellState::Unknown);
            }
            let cl = cluster_frontiers(&detect_frontiers(&m));
            let by_col = |col: usize| {
                cl.clusters
                    .iter()
                    .find(|c| c.centroid.col == col)
                    .unwrap()
                    .centroid
            };
            let (left, right) = (by_col(1), by_col(28));
            (m, cl, left, right)
        };
        let p = FieldParams::standard(7.0, 1.0);
        let mut ws = FieldWorkspace::new(300);

        let (m, cl, left, right) = strips(4);
        let top = |ws: &mut FieldWorkspace, c| on_top_plateau(ws, &m, &cl, 3, &p, c);
        assert!(top(&mut ws, left));
        assert!(top(&mut ws, GridCoord::new(left.row, 2)));
        assert!(!top(&mut ws, GridCoord::new(left.row, 3)));
        assert!(!top(&mut ws, right));

        let (m, cl, left, right) = strips(10);
        assert!(on_top_plateau(&mut ws, &m, &cl, 3, &p, left));
        assert!(on_top_plateau(&mut ws, &m, &cl, 3, &p, right));
    }

    #[test]
    fn unsupported_cells_are_zero() {
        let m = OccupancyGrid::filled(10, 40, 0.5, CellState::Free).unwrap();
        let poses = [RobotPose::new(0, Point::new(1.0, 1.0))];
        let p = FieldParams::standard(3.0, 0.5);
        let f = total_field(0, &m, &FrontierClustering::default(), &poses, 2, &p, &[0.0]);
        let far = GridCoord::new(9, 39);
        assert!(!f.support[m.index(far)]);
        assert_eq!(f.value(far), 0.0);
        assert!(f.support[m.index(GridCoord::new(2, 2))]);
    }

    #[test]
    fn pruned_min_matches_full_min() {
        // Cross-check the pruned search against one full wavefront per centroid.
        let mut m = OccupancyGrid::unknown(30, 30, 0.1).unwrap();
        for r in 3..27 {
            for c in 3..27 {
                m.set(GridCoord::new(r, c), CellState::Free);
            }
        }
        for r in 5..20 {
            m.set(GridCoord::new(r, 14), CellState::Occupied);
        }
        for c in 8..14 {
            m.set(GridCoord::new(10, c), CellState::Unknown);
        }
        let clustering = cluster_frontiers(&detect_frontiers(&m));
        assert!(clustering.len() >= 2);
        let p = params();
        let f = total_field(0, &m, &clustering, &[], 3, &p, &[]);
        let maps: Vec<WavefrontDistanceMap> = clustering
            .clusters
            .iter()
            .map(|q| wavefront_distance(&m, q.centroid).unwrap())
            .collect();
        for i in 0..m.len() {
            if m.at(i) != CellState::Free {
                continue;
            }
            let c = m.coord(i);
            let expect = clustering
                .clusters
                .iter()
                .zip(&maps)
                .map(|(q, w)| frontier_entropy(c, q, &clustering, 3, w, &p))
                .fold(0.0f64, f64::min);
            assert!(
                (f.h_f[i] - expect).abs() < 1e-9,
                "{c}: {} vs {expect}",
                f.h_f[i]
            );
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]
        #[test]
        fn bounded_argmin_matches_full_field(
            cells in proptest::collection::vec(0u8..10, 20 * 24),
            robots in proptest::collection::vec((0usize..20, 0usize..24, -0.1f64..0.1), 1..4),
            d_s in 0.3f64..3.0,
            masked in proptest::bool::ANY,
        ) {
            let cells: Vec<CellState> = cells
                .iter()
                .map(|&v| match v {
                    0 | 1 => CellState::Unknown,
                    2 => CellState::Occupied,
                    _ => CellState::Free,
                })
                .collect();
            let m = OccupancyGrid::from_cells(20, 24, 0.1, cells).unwrap();
            let clustering = cluster_frontiers(&detect_frontiers(&m));
            let mut p = params();
            p.d_s = d_s;
            p.epsilon_d = 0.1;
            let poses: Vec<RobotPose> = robots
                .iter()
                .enumerate()
                .map(|(k, &(r, c, _))| RobotPose::new(k, m.cell_center(GridCoord::new(r, c))))
                .collect();
            let noise: Vec<f64> = robots.iter().map(|r| r.2).collect();
            let n = poses.len();
            let allowed: Vec<bool> = (0..m.len()).map(|i| !masked || i % 3 != 0).collect();
            let full = total_field(0, &m, &clustering, &poses, n, &p, &noise);
            let expect = crate::goal::select_goal_cell(&full, &m, Some(&allowed));
            let mut ws = FieldWorkspace::new(m.len());
            // Dirty the workspace first; the search must not depend on leftovers.
            total_field_with(&mut ws, 0, &m, &clustering, &poses, n, &p, &noise);
            let got = field_argmin(&mut ws, 0, &m, &clustering, &poses, n, &p, &noise, Some(&allowed));
            match (expect, got) {
                (None, None) => {}
                (Some(a), Some(b)) => proptest::prop_assert!(
                    a == b || (full.value(a) - full.value(b)).abs() < 1e-9,
                    "{a} ({}) vs {b} ({})", full.value(a), full.value(b)
                ),
                other => proptest::prop_assert!(false, "{other:?}"),
            }
        }
    }

    #[test]
    fn sum_aggregate_adds_clusters() {
        let mut m = OccupancyGrid::filled(5, 9, 0.1, CellState::Free).unwrap();
        m.set(GridCoord::new(0, 0), CellState::Unknown);
        m.set(GridCoord::new(0, 8), CellState::Unknown);
        let clustering = cluster_frontiers(&detect_frontiers(&m));
        assert_eq!(clustering.len(), 2);
        let mut p = params();
        p.aggregate = FrontierAggregate::Sum;
        let f = total_field(0, &m, &clustering, &[], 3, &p, &[]);
        let probe = GridCoord::new(4, 4);
        let expect: f64 = clustering
            .clusters
            .iter()
            .map(|q| {
                let w = wavefront_distance(&m, q.centroid).unwrap();
                frontier_entropy(probe, q, &clustering, 3, &w, &p)
            })
            .sum();
        assert!((f.value(probe) - expect).abs() < 1e-12);
    }

    #[test]
    fn noise_off_is_zero() {
        let mut s = NoiseState::zeros(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            s.advance(&mut rng, 2.0, 0.0);
        }
        assert_eq!(s.values, vec![0.0; 3]);
    }

    #[test]
    fn noise_is_deterministic() {
        let run = || {
            let mut s = NoiseState::zeros(2);
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..50)
                .map(|_| {
                    s.advance(&mut rng, 2.0, 0.035);
                    s.values.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn noise_increment_std() {
        let sigma = 0.035;
        let mut s = NoiseState::zeros(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut incs = Vec::with_capacity(n);
        for _ in 0..n {
            let before = s.values[0];
            s.advance(&mut rng, 2.0, sigma);
            assert!(s.values[0].abs() <= 10.0 * sigma);
            incs.push(s.values[0] - before);
        }
        let mean = incs.iter().sum::<f64>() / n as f64;
        let var = incs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let ratio = var.sqrt() / sigma;
        assert!((ratio - 1.0).abs() < 0.05, "std ratio {ratio}");
    }

    #[test]
    fn white_noise_is_memoryless() {
        let mut s = NoiseState::zeros(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| {
                s.advance(&mut rng, 0.0, 1.0);
                s.values[0]
            })
            .collect();
        let lag1: f64 = xs.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / xs.len() as f64;
        assert!(lag1.abs() < 0.05, "{lag1}");
    }
}
