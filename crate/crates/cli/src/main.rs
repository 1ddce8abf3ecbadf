//! `fieldex` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a scenario, map or argument is invalid,
//! 2 when a run fails.

mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fieldex::harness::{run_batch, seed_range, write_batch, BatchResult};
use fieldex::scenario::{bundled_maze_starts, BUNDLED_MAZE};
use fieldex::{load_map, CellState, Error, Range, ScenarioConfig, Simulation};

use crate::sweep::SweepPlan;

#[derive(Parser)]
#[command(
    name = "fieldex",
    version,
    about = "Multi-robot entropy-field exploration simulator"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "FIELDEX_OUT_DIR", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write run.json and events.jsonl.
    Run(ScenarioArgs),
    /// Run `rounds` seeds (default 20) and write batch.csv and stats.json.
    Batch(ScenarioArgs),
    /// Run a batch for every combination of comma-separated r_comm,
    /// n_robots and policy values.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Print the schedule without running anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Parse a map file and report its size.
    ValidateMap { path: PathBuf },
    /// Simulate up to a time and write one robot's field as CSV.
    DumpField {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        robot: usize,
        /// Simulated seconds to advance before dumping.
        #[arg(long, default_value_t = 0.0)]
        at: f64,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML). Defaults to the bundled maze with 3 robots.
    #[arg(short, long)]
    scenario: Option<PathBuf>,
    /// `key=value` overrides, e.g. `r_comm=inf seed=3 rounds=20`.
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let validation = e
        .chain()
        .filter_map(|c| c.downcast_ref::<Error>())
        .any(Error::is_validation);
    if validation {
        1
    } else {
        2
    }
}

fn invalid(field: &str, msg: impl Into<String>) -> anyhow::Error {
    Error::Scenario {
        field: field.into(),
        msg: msg.into(),
    }
    .into()
}

fn dispatch(cli: Cli) -> Result<()> {
    let out = cli.out;
    match cli.command {
        Command::Run(args) => {
            let (cfg, rounds) = load(&args, &args.overrides)?;
            if rounds.is_some() {
                return Err(invalid("rounds", "only batch and sweep take rounds"));
            }
            let record = fieldex::run(&cfg)?;
            let dir = out
                .join("run")
                .join(format!("{}_s{}", cfg.label(), cfg.seed));
            create_dir(&dir)?;
            write(&dir.join("run.json"), record.to_json() + "\n")?;
            write(&dir.join("events.jsonl"), record.events_jsonl())?;
            match record.time {
                Some(t) => println!("{}: success at T={t:.2} s", cfg.label()),
                None => println!(
                    "{}: {:?} after {:.2} s, coverage {:.4}",
                    cfg.label(),
                    record.outcome,
                    record.end_time,
                    record.final_coverage
                ),
            }
            println!("wrote {}", dir.display());
        }
        Command::Batch(args) => {
            let (cfg, rounds) = load(&args, &args.overrides)?;
            let rounds = rounds.unwrap_or(20);
            let result = batch(&cfg, rounds)?;
            let dir = out.join("batch").join(cfg.label());
            write_batch(&dir, &result, &cfg)?;
            print_stats(&cfg.label(), &result);
            println!("wrote {}", dir.display());
        }
        Command::Sweep { scenario, dry_run } => {
            let plan = SweepPlan::new(&scenario.overrides)?;
            let mut cells = Vec::with_capacity(plan.cells.len());
            for cell in &plan.cells {
                let (cfg, _) = load(&scenario, cell)?;
                cells.push(cfg);
            }
            for cfg in &cells {
                println!("{}: {} rounds", cfg.label(), plan.rounds);
            }
            println!(
                "{} rounds scheduled over {} configurations",
                plan.total_rounds(),
                cells.len()
            );
            if dry_run {
                return Ok(());
            }
            let root = out.join("sweep");
            let mut summary =
                String::from("policy,n_robots,r_comm,rounds,r_success,t_bar,sd_t,rsd_t\n");
            for cfg in &cells {
                let result = batch(cfg, plan.rounds)?;
                write_batch(&root.join(cfg.label()), &result, cfg)?;
                print_stats(&cfg.label(), &result);
                let s = &result.stats;
                let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                summary.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    cfg.policy,
                    cfg.n_robots,
                    cfg.r_comm,
                    plan.rounds,
                    s.r_success,
                    opt(s.t_bar),
                    opt(s.sd_t),
                    opt(s.rsd_t)
                ));
            }
            write(&root.join("sweep.csv"), summary)?;
            println!("wrote {}", root.display());
        }
        Command::ValidateMap { path } => {
            let m = load_map(&path)?;
            let free = (0..m.len()).filter(|&i| m.at(i) == CellState::Free).count();
            println!(
                "{}: {} x {} cells at {} m, {free} free",
                path.display(),
                m.rows(),
                m.cols(),
                m.resolution()
            );
        }
        Command::DumpField {
            scenario,
            robot,
            at,
        } => {
            let (cfg, rounds) = load(&scenario, &scenario.overrides)?;
            if rounds.is_some() {
                return Err(invalid("rounds", "only batch and sweep take rounds"));
            }
            if robot >= cfg.n_robots {
                return Err(invalid(
                    "robot",
                    format!("{robot} out of range for {} robots", cfg.n_robots),
                ));
            }
            if !(at.is_finite() && at >= 0.0) {
                return Err(invalid("at", "must be a time >= 0"));
            }
            let mut sim = Simulation::new(&cfg)?;
            while sim.time() + 1e-9 < at {
                if sim.step()?.is_some() {
                    break;
                }
            }
            let field = sim.field(robot);
            let dir = out.join("field");
            create_dir(&dir)?;
            let path = dir.join(format!(
                "{}_s{}_robot{robot}_t{}.csv",
                cfg.label(),
                cfg.seed,
                sim.time()
            ));
            write(&path, field.to_csv())?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// Builds the effective scenario from the file (or the bundled maze) and
/// `overrides`. `rounds=` belongs to the CLI and is returned separately.
fn load(args: &ScenarioArgs, overrides: &[String]) -> Result<(ScenarioConfig, Option<usize>)> {
    let mut rounds = None;
    let mut rest = Vec::new();
    for o in overrides {
        match o.split_once('=') {
            Some((k, v)) if k.trim() == "rounds" => {
                let n: usize = v
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| invalid("rounds", format!("invalid count {v:?}")))?;
                rounds = Some(n);
            }
            _ => rest.push(o.clone()),
        }
    }
    let mut cfg = match &args.scenario {
        Some(path) => ScenarioConfig::load(path, &rest)?,
        None => ScenarioConfig::bundled_maze(3, Range(4.0), 0).with_overrides(&rest)?,
    };
    let starts_given = rest
        .iter()
        .any(|o| o.split_once('=').is_some_and(|(k, _)| k.trim() == "starts"));
    if !starts_given {
        fit_starts(&mut cfg);
    }
    Ok((cfg, rounds))
}

/// Changing `n_robots` keeps the first starts of the scenario. On the bundled
/// maze missing starts come from its standard list.
fn fit_starts(cfg: &mut ScenarioConfig) {
    let n = cfg.n_robots;
    if cfg.starts.len() > n {
        cfg.starts.truncate(n);
    } else if cfg.starts.len() < n && cfg.world == BUNDLED_MAZE {
        let standard = bundled_maze_starts();
        if standard.starts_with(&cfg.starts) && standard.len() >= n {
            cfg.starts = standard[..n].to_vec();
        }
    }
}

fn batch(cfg: &ScenarioConfig, rounds: usize) -> Result<BatchResult> {
    let seeds = seed_range(cfg.seed, rounds);
    Ok(run_batch(cfg, rounds, &seeds, cfg.policy)?)
}

fn print_stats(label: &str, result: &BatchResult) {
    let s = &result.stats;
    let t = s
        .t_bar
        .map(|t| format!("{t:.2} s"))
        .unwrap_or_else(|| "n/a".into());
    let rsd = s
        .rsd_t
        .map(|v| format!("{v:.2}%"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "{label}: R_success {:.1}% ({}/{}), T {t}, RSD {rsd}",
        s.r_success, s.n_success, s.n_total
    );
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
