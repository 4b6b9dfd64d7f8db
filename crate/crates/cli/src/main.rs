//! `iics`: run, sweep and compare intersection simulations, solve single
//! lead-vehicle problems and size detection ranges.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use iics_core::lto::{brute_force_lto, solve_lto, LtoProblem};
use iics_core::metrics::{compare_controllers, compute_moes, run_sweep, sweep_csv, compare_csv, MoeReport, SweepGrid};
use iics_core::scenario::{load_scenario, mph_to_fps, Scenario};
use iics_core::sim::{check_scenario_feasibility, min_detection_range, run, ControllerKind};
use iics_core::Error;
use serde::Serialize;

const DEFAULT_SEED: u64 = 42;

/// Exit status for a problem with no feasible trajectory.
const EXIT_INFEASIBLE: u8 = 3;
/// Exit status for a sweep in which some cells failed.
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(name = "iics", version, about = "Signal control and automated-vehicle trajectory planning for an isolated intersection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print average travel time, delay and
    /// effective green (all in s).
    Run(RunArgs),
    /// Run a grid of scenarios and write one CSV row per cell and seed.
    Sweep(SweepArgs),
    /// Run both controllers on identical arrivals for every grid cell and
    /// write the paired differences as CSV.
    Compare(SweepArgs),
    /// Solve one lead-vehicle trajectory problem given as JSON (ft, s, ft/s,
    /// ft/s²).
    Solve(SolveArgs),
    /// Minimum detection range (ft) for a vehicle to be served and still slow
    /// to its crossing speed.
    Range(RangeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Controller {
    Iics,
    Actuated,
}

impl From<Controller> for ControllerKind {
    fn from(c: Controller) -> Self {
        match c {
            Controller::Iics => ControllerKind::Iics,
            Controller::Actuated => ControllerKind::Actuated,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON; the built-in four-leg intersection when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "iics")]
    controller: Controller,
    /// Random seed for arrivals [default: the scenario's seed, else 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Write the result and its summary as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include every vehicle's sampled trajectory in the JSON (large).
    #[arg(long)]
    trajectories: bool,
    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Base scenario JSON; the built-in intersection when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Use the full grid: 10 detection ranges over 500..3000 ft, 10 AV ratios
    /// over 0.3..1, 10 mean headways over 8..60 s, saturation headways of 1,
    /// 1.5 and 2 s.
    #[arg(long)]
    full_grid: bool,
    /// Detection ranges (ft), comma separated.
    #[arg(long, value_delimiter = ',')]
    ranges: Vec<f64>,
    /// AV market shares in [0, 1], comma separated.
    #[arg(long, value_delimiter = ',')]
    av_ratios: Vec<f64>,
    /// Mean arrival headways per lane (s), comma separated.
    #[arg(long, value_delimiter = ',')]
    headways: Vec<f64>,
    /// Saturation headways (s), comma separated.
    #[arg(long, value_delimiter = ',')]
    saturation_headways: Vec<f64>,
    /// Number of seeds per cell, counting up from --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Controller for `sweep` (ignored by `compare`).
    #[arg(long, value_enum, default_value = "iics")]
    controller: Controller,
    /// Worker threads; 0 uses every core. The table does not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON with d0 (ft), v0, v_max, v_cross, v_des (ft/s), t0 (s),
    /// a_max_dec, a_max_acc (ft/s²) and green_windows [{start, end}] (s).
    problem: PathBuf,
    /// Also solve by exhaustive grid search and print its delay.
    #[arg(long)]
    verify: bool,
    /// Grid points per variable for --verify.
    #[arg(long, default_value_t = 50)]
    grid: usize,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RangeArgs {
    /// Speed at detection (ft/s).
    #[arg(long, required_unless_present = "v0_mph", conflicts_with = "v0_mph")]
    v0: Option<f64>,
    /// Speed at detection (mph).
    #[arg(long)]
    v0_mph: Option<f64>,
    /// Maximum crossing speed at the stop bar (ft/s).
    #[arg(long, required_unless_present = "v_cross_mph", conflicts_with = "v_cross_mph")]
    v_cross: Option<f64>,
    /// Maximum crossing speed at the stop bar (mph).
    #[arg(long)]
    v_cross_mph: Option<f64>,
    /// Maximum deceleration (ft/s², negative).
    #[arg(long, default_value_t = -15.0)]
    accel: f64,
    /// Time from detection until the vehicle follows its trajectory (s).
    #[arg(long, default_value_t = 0.1)]
    dt_serve: f64,
    /// Detection range to check against (ft).
    #[arg(long)]
    against: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a, false),
        Command::Compare(a) => cmd_sweep(a, true),
        Command::Solve(a) => cmd_solve(a),
        Command::Range(a) => cmd_range(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn read_scenario(path: Option<&Path>) -> Result<Scenario> {
    let Some(path) = path else {
        return Ok(Scenario::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("cannot read scenario {}", path.display()))?;
    load_scenario(&text).with_context(|| format!("invalid scenario {}", path.display()))
}

fn write_output(path: &Path, contents: &str, force: bool) -> Result<()> {
    if path.exists() && !force {
        bail!("{} exists; pass --force to overwrite", path.display());
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn fmt_opt(x: Option<f64>, unit: &str) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3} {unit}"))
}

#[derive(Serialize)]
struct RunOutput<'a> {
    moes: &'a MoeReport,
    result: &'a iics_core::sim::SimResult,
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let mut scenario = read_scenario(a.scenario.as_deref())?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    } else if a.scenario.is_none() {
        scenario.seed = DEFAULT_SEED;
    }
    for w in check_scenario_feasibility(&scenario) {
        eprintln!("warning: {w}");
    }
    let controller: ControllerKind = a.controller.into();
    let mut result = run(&scenario, controller)?;
    if !a.trajectories {
        result = result.without_trajectories();
    }
    let m = compute_moes(&result);
    println!("controller: {controller}");
    println!("seed: {}", scenario.seed);
    println!("avg travel time: {}", fmt_opt(m.avg_travel_time, "s"));
    println!("avg delay: {}", fmt_opt(m.avg_delay, "s"));
    println!("avg effective green: {}", fmt_opt(m.avg_effective_green, "s"));
    println!("avg travel time per mile: {}", fmt_opt(m.avg_travel_time_per_mile, "s/mi"));
    println!("throughput: {} vehicles", m.throughput);
    println!("residual: {} vehicles", m.residual_count);
    if let Some(out) = &a.out {
        let doc = serde_json::to_string_pretty(&RunOutput { moes: &m, result: &result })?;
        write_output(out, &doc, a.force)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn grid_from(a: &SweepArgs, base: &Scenario) -> Result<SweepGrid> {
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    if a.full_grid {
        return Ok(SweepGrid::full(seeds));
    }
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let grid = SweepGrid {
        detection_ranges: or(&a.ranges, base.lanes[0].detection_range),
        av_ratios: or(&a.av_ratios, base.arrivals.av_ratio),
        mean_headways: or(&a.headways, base.arrivals.mean_headway),
        saturation_headways: or(&a.saturation_headways, base.arrivals.saturation_headway),
        seeds,
    };
    grid.validate()?;
    Ok(grid)
}

fn cmd_sweep(a: SweepArgs, compare: bool) -> Result<ExitCode> {
    let base = read_scenario(a.scenario.as_deref())?;
    let grid = grid_from(&a, &base)?;
    if a.out.exists() && !a.force {
        bail!("{} exists; pass --force to overwrite", a.out.display());
    }
    let (csv, failed, total) = if compare {
        let rows = compare_controllers(&base, &grid, a.threads)?;
        let failed = rows.iter().filter(|r| r.iics.is_err() || r.actuated.is_err()).count();
        (compare_csv(&rows), failed, rows.len())
    } else {
        let rows = run_sweep(&base, &grid, a.controller.into(), a.threads)?;
        let failed = rows.iter().filter(|r| r.error.is_some()).count();
        (sweep_csv(&rows), failed, rows.len())
    };
    write_output(&a.out, &csv, a.force)?;
    println!("wrote {total} rows to {}", a.out.display());
    if failed > 0 {
        eprintln!("{failed} of {total} cells failed");
        return Ok(ExitCode::from(EXIT_PARTIAL));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.problem).with_context(|| format!("cannot read problem {}", a.problem.display()))?;
    let p: LtoProblem = serde_json::from_str(&text).with_context(|| format!("invalid problem {}", a.problem.display()))?;
    p.validate()?;
    let sol = match solve_lto(&p) {
        Ok(s) => s,
        Err(Error::Infeasible) => {
            println!("infeasible");
            return Ok(ExitCode::from(EXIT_INFEASIBLE));
        }
        Err(e) => return Err(e.into()),
    };
    println!("{}", serde_json::to_string_pretty(&sol)?);
    if a.verify {
        match brute_force_lto(&p, a.grid) {
            Ok(g) => {
                println!("oracle delay: {:.6} s", g.delay);
                if sol.delay > g.delay + 1e-6 {
                    println!("oracle violation: solver delay {:.6} s exceeds oracle", sol.delay);
                    return Ok(ExitCode::FAILURE);
                }
            }
            Err(Error::Infeasible) => println!("oracle delay: infeasible"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_range(a: RangeArgs) -> Result<ExitCode> {
    let v0 = a.v0.or(a.v0_mph.map(mph_to_fps)).context("missing --v0")?;
    let v_cross = a.v_cross.or(a.v_cross_mph.map(mph_to_fps)).context("missing --v-cross")?;
    if !(a.accel < 0.0) {
        bail!("--accel must be negative (a deceleration in ft/s²)");
    }
    if a.dt_serve < 0.0 || v0 < 0.0 || v_cross < 0.0 {
        bail!("speeds and --dt-serve must be non-negative");
    }
    let d = min_detection_range(v0, v_cross, a.accel, a.dt_serve);
    println!("min detection range: {d:.2} ft");
    if let Some(r) = a.against {
        println!("{}", if r >= d { "feasible" } else { "infeasible" });
    }
    Ok(ExitCode::SUCCESS)
}
