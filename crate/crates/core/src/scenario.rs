//! Scenario files.
//!
//! A scenario is a flat TOML document. Every key is listed in [`KEYS`]; unknown
//! keys are rejected. Keys left out take the documented defaults, and
//! [`ScenarioConfig::resolve`] fills the map-dependent ones so the echoed
//! config lists every effective value.
//!
//! ```toml
//! schema_version = 1
//! world = "maze.map"          # relative to the scenario file, or "bundled:maze"
//! n_robots = 3
//! starts = [[1.0, 5.5], [2.0, 5.5], [3.0, 5.5]]
//! r_comm = 4.0                # or inf
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{FieldParams, FrontierAggregate};
use crate::grid::{CellState, GridCoord, OccupancyGrid, Point};
use crate::mapfile;
use crate::sense::auto_ray_count;

pub const SCHEMA_VERSION: u32 = 1;

/// World name that loads the maze shipped with this crate.
pub const BUNDLED_MAZE: &str = "bundled:maze";

const MAZE_TEXT: &str = include_str!("../data/maze.map");

/// The bundled 20 m × 11 m office maze at 0.05 m per cell.
pub fn bundled_maze() -> OccupancyGrid {
    mapfile::parse_map(MAZE_TEXT).expect("bundled maze parses")
}

/// Start positions in the bundled maze's central corridor, west to east.
pub fn bundled_maze_starts() -> Vec<[f64; 2]> {
    vec![[1.0, 5.5], [2.0, 5.5], [3.0, 5.5], [4.0, 5.5], [5.0, 5.5]]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Minimize the total entropy field.
    #[default]
    Mef,
    /// Nearest frontier centroid by wavefront distance.
    Greedy,
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyKind::Mef => "mef",
            PolicyKind::Greedy => "greedy",
        })
    }
}

/// Communication range in meters; `inf` means perfect communication.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Range(pub f64);

impl Range {
    pub const INFINITE: Range = Range(f64::INFINITY);

    pub fn parse(s: &str) -> Option<Range> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "∞" => Some(Range::INFINITE),
            other => other.parse::<f64>().ok().filter(|v| !v.is_nan()).map(Range),
        }
    }
}

impl std::fmt::Display for Range {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Range {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for Range {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Range(v)),
            Raw::Int(v) => Ok(Range(v as f64)),
            Raw::Text(t) => Range::parse(&t)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid range {t:?}"))),
        }
    }
}

fn d_schema() -> u32 {
    SCHEMA_VERSION
}
fn d_r_comm() -> Range {
    Range(4.0)
}
fn d_d_s() -> f64 {
    7.0
}
fn d_v_max() -> f64 {
    0.5
}
fn d_dt() -> f64 {
    0.1
}
fn d_threshold() -> f64 {
    0.99
}
fn d_stuck() -> f64 {
    120.0
}
fn d_max_time() -> f64 {
    1800.0
}
fn d_k_f_base() -> f64 {
    2.0
}
fn d_one() -> f64 {
    1.0
}
fn d_sigma_r() -> f64 {
    0.6
}
fn d_alpha() -> f64 {
    2.0
}
fn d_sigma_d() -> f64 {
    0.035
}
fn d_k_ref() -> f64 {
    0.1
}
fn d_true() -> bool {
    true
}

/// Every parameter of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "d_schema")]
    pub schema_version: u32,
    /// Map file path or [`BUNDLED_MAZE`].
    pub world: String,
    pub n_robots: usize,
    /// World positions `[x, y]` in meters, one per robot.
    pub starts: Vec<[f64; 2]>,
    #[serde(default = "d_r_comm")]
    pub r_comm: Range,
    #[serde(default = "d_d_s")]
    pub d_s: f64,
    #[serde(default = "d_v_max")]
    pub v_max: f64,
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_threshold")]
    pub coverage_threshold: f64,
    #[serde(default = "d_stuck")]
    pub stuck_timeout: f64,
    #[serde(default = "d_max_time")]
    pub max_sim_time: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default = "d_k_f_base")]
    pub k_f_base: f64,
    #[serde(default = "d_one")]
    pub k_r: f64,
    #[serde(default = "d_sigma_r")]
    pub sigma_r: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_sigma_d")]
    pub sigma_d: f64,
    /// Defaults to one cell.
    #[serde(default)]
    pub epsilon_d: Option<f64>,
    #[serde(default)]
    pub aggregate: FrontierAggregate,
    #[serde(default = "d_k_ref")]
    pub k_ref: f64,
    /// Defaults to two cells.
    #[serde(default)]
    pub arrival_tolerance: Option<f64>,
    /// Defaults to [`auto_ray_count`].
    #[serde(default)]
    pub rays: Option<usize>,
    /// Low-speed layer: robots see each other's positions.
    #[serde(default = "d_true")]
    pub share_positions: bool,
    /// Judge success on the union of all robot maps (evaluation only; robots
    /// never see it).
    #[serde(default)]
    pub merged_coverage: bool,
}

/// Keys accepted in scenario files and overrides.
pub const KEYS: &[&str] = &[
    "schema_version",
    "world",
    "n_robots",
    "starts",
    "r_comm",
    "d_s",
    "v_max",
    "dt",
    "coverage_threshold",
    "stuck_timeout",
    "max_sim_time",
    "seed",
    "policy",
    "k_f_base",
    "k_r",
    "sigma_r",
    "alpha",
    "sigma_d",
    "epsilon_d",
    "aggregate",
    "k_ref",
    "arrival_tolerance",
    "rays",
    "share_positions",
    "merged_coverage",
];

/// Parses `key=value` into a TOML value, falling back to a plain string so
/// `world=maps/a.map` needs no quoting.
pub fn parse_override(arg: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| Error::scenario(arg, "override must look like key=value"))?;
    let key = key.trim();
    if !KEYS.contains(&key) {
        return Err(Error::scenario(key, "unknown key"));
    }
    let raw = raw.trim();
    let value = if key == "r_comm" {
        let r = Range::parse(raw)
            .ok_or_else(|| Error::scenario(key, format!("invalid range {raw:?}")))?;
        if r.0.is_finite() {
            toml::Value::Float(r.0)
        } else {
            toml::Value::String("inf".into())
        }
    } else {
        format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()))
    };
    Ok((key.to_string(), value))
}

impl ScenarioConfig {
    /// A scenario on the bundled maze with standard parameters.
    pub fn bundled_maze(n_robots: usize, r_comm: Range, seed: u64) -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            world: BUNDLED_MAZE.into(),
            n_robots,
            starts: bundled_maze_starts().into_iter().take(n_robots).collect(),
            r_comm,
            d_s: d_d_s(),
            v_max: d_v_max(),
            dt: d_dt(),
            coverage_threshold: d_threshold(),
            stuck_timeout: d_stuck(),
            max_sim_time: d_max_time(),
            seed,
            policy: PolicyKind::Mef,
            k_f_base: d_k_f_base(),
            k_r: 1.0,
            sigma_r: d_sigma_r(),
            alpha: d_alpha(),
            sigma_d: d_sigma_d(),
            epsilon_d: None,
            aggregate: FrontierAggregate::Min,
            k_ref: d_k_ref(),
            arrival_tolerance: None,
            rays: None,
            share_positions: true,
            merged_coverage: false,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            Error::scenario(first_key(&e), e.message().to_string())
        })?;
        Self::from_table(table, &[])
    }

    /// Loads a scenario file, applies `key=value` overrides, and resolves the
    /// world path against the file's directory.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            Error::scenario(first_key(&e), e.message().to_string())
        })?;
        let parsed: Vec<(String, toml::Value)> = overrides
            .iter()
            .map(|o| parse_override(o))
            .collect::<Result<_>>()?;
        let mut cfg = Self::from_table(table, &parsed)?;
        let world_overridden = parsed.iter().any(|(k, _)| k == "world");
        if cfg.world != BUNDLED_MAZE && !world_overridden {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.world = base.join(&cfg.world).to_string_lossy().into_owned();
        }
        Ok(cfg)
    }

    fn from_table(mut table: toml::Table, overrides: &[(String, toml::Value)]) -> Result<Self> {
        for key in table.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::scenario(key.clone(), "unknown key"));
            }
        }
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        // Deserialize key by key so errors name the offending field.
        for key in KEYS {
            if let Some(v) = table.get(*key) {
                check_field(key, v)?;
            }
        }
        let cfg: ScenarioConfig =
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| {
                    Error::scenario(first_key(&e), e.message().to_string())
                })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::scenario(
                "schema_version",
                format!("unsupported version {}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides to an already loaded config.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let table = match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t,
            _ => return Err(Error::scenario("config", "cannot re-encode scenario")),
        };
        let parsed: Vec<(String, toml::Value)> = overrides
            .iter()
            .map(|o| parse_override(o))
            .collect::<Result<_>>()?;
        Self::from_table(table, &parsed)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(value.clone())?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scenario serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn load_world(&self) -> Result<OccupancyGrid> {
        if self.world == BUNDLED_MAZE {
            Ok(bundled_maze())
        } else {
            mapfile::load_map(&self.world)
        }
    }

    /// Fills map-dependent defaults.
    pub fn resolve(&mut self, world: &OccupancyGrid) {
        let res = world.resolution();
        self.epsilon_d.get_or_insert(res);
        self.arrival_tolerance.get_or_insert(2.0 * res);
        self.rays
            .get_or_insert_with(|| auto_ray_count(self.d_s, res));
    }

    pub fn start_points(&self) -> Vec<Point> {
        self.starts.iter().map(|&[x, y]| Point::new(x, y)).collect()
    }

    pub fn field_params(&self, resolution: f64) -> FieldParams {
        FieldParams {
            k_f_base: self.k_f_base,
            k_r: self.k_r,
            sigma_r: self.sigma_r,
            alpha: self.alpha,
            sigma_d: self.sigma_d,
            d_s: self.d_s,
            epsilon_d: self.epsilon_d.unwrap_or(resolution),
            aggregate: self.aggregate,
        }
    }

    /// Checks every invariant against the world map. Returns the start cells.
    pub fn validate(&self, world: &OccupancyGrid) -> Result<Vec<GridCoord>> {
        if self.n_robots == 0 {
            return Err(Error::scenario("n_robots", "must be at least 1"));
        }
        if self.starts.len() != self.n_robots {
            return Err(Error::scenario(
                "starts",
                format!("{} starts for {} robots", self.starts.len(), self.n_robots),
            ));
        }
        let mut cells = Vec::with_capacity(self.n_robots);
        for (i, p) in self.start_points().into_iter().enumerate() {
            let c = world.cell_at(p).ok_or_else(|| {
                Error::scenario(
                    "starts",
                    format!("start {i} ({}, {}) is off the map", p.x, p.y),
                )
            })?;
            if world.get(c) != CellState::Free {
                return Err(Error::scenario(
                    "starts",
                    format!("start {i} is not on a Free cell"),
                ));
            }
            if cells.contains(&c) {
                return Err(Error::scenario(
                    "starts",
                    format!("start {i} shares a cell with another robot"),
                ));
            }
            cells.push(c);
        }
        if self.r_comm.0.is_nan() || self.r_comm.0 < 0.0 {
            return Err(Error::scenario("r_comm", "must be >= 0 or inf"));
        }
        positive("dt", self.dt)?;
        positive("v_max", self.v_max)?;
        positive("stuck_timeout", self.stuck_timeout)?;
        positive("max_sim_time", self.max_sim_time)?;
        if !(self.coverage_threshold > 0.0 && self.coverage_threshold <= 1.0) {
            return Err(Error::scenario("coverage_threshold", "must be in (0, 1]"));
        }
        if !(self.k_ref > 0.0 && self.k_ref < 1.0) {
            return Err(Error::scenario("k_ref", "must be in (0, 1)"));
        }
        if let Some(tol) = self.arrival_tolerance {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::scenario("arrival_tolerance", "must be >= 0"));
            }
        }
        if self.rays == Some(0) {
            return Err(Error::scenario("rays", "must be positive"));
        }
        self.field_params(world.resolution()).validate()?;
        Ok(cells)
    }

    /// Short label for file names and logs.
    pub fn label(&self) -> String {
        format!("{}_n{}_r{}", self.policy, self.n_robots, self.r_comm)
    }

    pub fn world_path(&self) -> Option<PathBuf> {
        (self.world != BUNDLED_MAZE).then(|| PathBuf::from(&self.world))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::scenario(name, format!("{v} must be > 0")))
    }
}

fn first_key(e: &toml::de::Error) -> String {
    e.span()
        .map(|s| format!("bytes {}..{}", s.start, s.end))
        .unwrap_or_else(|| "document".into())
}

/// Type-checks a single key by deserializing it on its own.
fn check_field(key: &str, v: &toml::Value) -> Result<()> {
    fn check<T: for<'de> Deserialize<'de>>(key: &str, v: &toml::Value) -> Result<()> {
        v.clone()
            .try_into::<T>()
            .map(|_| ())
            .map_err(|e| Error::scenario(key, e.message().to_string()))
    }
    match key {
        "schema_version" => check::<u32>(key, v),
        "world" => check::<String>(key, v),
        "n_robots" | "rays" => check::<usize>(key, v),
        "seed" => check::<u64>(key, v),
        "starts" => check::<Vec<[f64; 2]>>(key, v),
        "r_comm" => check::<Range>(key, v),
        "policy" => check::<PolicyKind>(key, v),
        "aggregate" => check::<FrontierAggregate>(key, v),
        "share_positions" | "merged_coverage" => check::<bool>(key, v),
        _ => check::<f64>(key, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        world = "bundled:maze"
        n_robots = 2
        starts = [[1.0, 5.5], [2.0, 5.5]]
    "#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.schema_version, 1);
        assert_eq!(cfg.r_comm, Range(4.0));
        assert_eq!(cfg.d_s, 7.0);
        assert_eq!(cfg.coverage_threshold, 0.99);
        assert_eq!(cfg.stuck_timeout, 120.0);
        assert_eq!(cfg.k_ref, 0.1);
        assert_eq!(cfg.sigma_r, 0.6);
        assert_eq!(cfg.sigma_d, 0.035);
        assert_eq!(cfg.policy, PolicyKind::Mef);
        let world = cfg.load_world().unwrap();
        let cells = cfg.validate(&world).unwrap();
        assert_eq!(cells.len(), 2);
    }

    #[test]
    fn resolve_makes_every_value_explicit() {
        let mut cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        let world = cfg.load_world().unwrap();
        cfg.resolve(&world);
        assert_eq!(cfg.epsilon_d, Some(0.05));
        assert_eq!(cfg.arrival_tolerance, Some(0.1));
        assert_eq!(cfg.rays, Some(auto_ray_count(7.0, 0.05)));
        let json = cfg.to_json();
        for key in KEYS {
            assert!(
                json.get(*key).is_some_and(|v| !v.is_null()),
                "{key} missing from echo"
            );
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ScenarioConfig::from_toml_str(&format!("{MINIMAL}\nbogus = 1\n")).unwrap_err();
        assert!(
            matches!(err, Error::Scenario { ref field, .. } if field == "bogus"),
            "{err}"
        );
        assert!(parse_override("nope=3").is_err());
        assert!(parse_override("r_comm").is_err());
    }

    #[test]
    fn bad_value_names_field() {
        let err =
            ScenarioConfig::from_toml_str(&format!("{MINIMAL}\ndt = \"fast\"\n")).unwrap_err();
        assert!(
            matches!(err, Error::Scenario { ref field, .. } if field == "dt"),
            "{err}"
        );
    }

    #[test]
    fn overrides_and_inf() {
        let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        let cfg = cfg
            .with_overrides(&["r_comm=inf".into(), "seed=9".into(), "policy=greedy".into()])
            .unwrap();
        assert!(cfg.r_comm.0.is_infinite());
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.policy, PolicyKind::Greedy);
        let (_, v) = parse_override("world=maps/a.map").unwrap();
        assert_eq!(v, toml::Value::String("maps/a.map".into()));
        assert!(
            ScenarioConfig::from_toml_str(&format!("{MINIMAL}\nr_comm = inf\n"))
                .unwrap()
                .r_comm
                .0
                .is_infinite()
        );
    }

    #[test]
    fn json_echo_round_trips() {
        let mut cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        cfg.r_comm = Range::INFINITE;
        cfg.resolve(&bundled_maze());
        let text = serde_json::to_string(&cfg.to_json()).unwrap();
        let back = ScenarioConfig::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let toml_back = ScenarioConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(toml_back, cfg);
    }

    #[test]
    fn validation_failures() {
        let world = bundled_maze();
        let base = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        let cases: Vec<(&str, ScenarioConfig)> = vec![
            (
                "starts",
                ScenarioConfig {
                    n_robots: 3,
                    ..base.clone()
                },
            ),
            (
                "starts",
                ScenarioConfig {
                    starts: vec![[1.0, 5.5], [1.01, 5.51]],
                    ..base.clone()
                },
            ),
            (
                "starts",
                ScenarioConfig {
                    starts: vec![[0.01, 0.01], [2.0, 5.5]],
                    ..base.clone()
                },
            ),
            (
                "starts",
                ScenarioConfig {
                    starts: vec![[-1.0, 5.5], [2.0, 5.5]],
                    ..base.clone()
                },
            ),
            (
                "dt",
                ScenarioConfig {
                    dt: 0.0,
                    ..base.clone()
                },
            ),
            (
                "coverage_threshold",
                ScenarioConfig {
                    coverage_threshold: 1.5,
                    ..base.clone()
                },
            ),
            (
                "k_ref",
                ScenarioConfig {
                    k_ref: 1.0,
                    ..base.clone()
                },
            ),
            (
                "r_comm",
                ScenarioConfig {
                    r_comm: Range(-1.0),
                    ..base.clone()
                },
            ),
            (
                "sigma_r",
                ScenarioConfig {
                    sigma_r: 0.0,
                    ..base.clone()
                },
            ),
        ];
        for (field, cfg) in cases {
            match cfg.validate(&world) {
                Err(Error::Scenario { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: expected error, got {other:?}"),
            }
        }
    }
}
