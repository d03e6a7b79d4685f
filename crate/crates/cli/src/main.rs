use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use supercycle::schedule::{search_space, select_best, sweep, Candidate};
use supercycle::sim::{self, SimConfig};
use supercycle::{build_plan, deploy, optimize_partition_size, PlanError, SupercyclePlan};

mod config;
mod svg;

use config::RunConfig;

const AFTER_HELP: &str = "\
Configuration is a TOML file with sections [grid], [fleet], [solver], [sim]
and [output]. Required: grid.{x_max, y_max, d, z_bar} and
fleet.{uavs, ugvs, e_bar, beta_minus, beta_plus, uav_speed, ugv_speed}.
Defaults: solver.n_exact = 16, solver.seed = 0, solver.restarts = 8,
solver.divisors_only = false, solver.execution = \"parallel\",
solver.partition = unset (sweep all a1 x a2), solver.pin_delta_e = unset,
sim.dt = min segment / 10 capped at 0.1, sim.horizon_cycles = 3,
sim.node_tolerance = d / 100, output.dir = \"out\".
The sweep always uses tour-derived energy; --pin-delta-e only replaces the
energy budget of the plan that is finally built.

Exit codes: 0 success, 1 usage or I/O error, 2 infeasible, 3 safety fault.";

#[derive(Debug, Parser)]
#[command(name = "supercycle", version, about = "Plan and verify persistent UAV surveillance with mobile charging stations", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Heuristic tour seed; overrides solver.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use this energy budget instead of the tour-derived one.
    #[arg(long = "pin-delta-e", global = true)]
    pin_delta_e: Option<f64>,
    /// Simulation step; overrides sim.dt.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Simulated supercycles; overrides sim.horizon_cycles.
    #[arg(long = "horizon-cycles", global = true)]
    horizon_cycles: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Choose partition extents and write the plan, trajectories and plot.
    Plan,
    /// Tabulate the supercycle period for every partition size.
    Sweep,
    /// Simulate a previously written plan and measure age and safety.
    Simulate,
    /// Print the summaries of the plan and simulation in the output directory.
    Report,
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Infeasible(String),
    Safety(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

/// Everything `simulate` needs, written by `plan`.
#[derive(Debug, Serialize, Deserialize)]
struct PlanArtifact {
    config: RunConfig,
    plan: SupercyclePlan,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Safety(msg)) => {
            eprintln!("safety fault: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Plan => cmd_plan(&cli),
        Command::Sweep => cmd_sweep(&cli),
        Command::Simulate => cmd_simulate(&cli),
        Command::Report => cmd_report(&cli),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_deref().context("--config <path> is required")?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    if let Some(pin) = cli.pin_delta_e {
        anyhow::ensure!(
            pin >= 0.0 && pin.is_finite(),
            "--pin-delta-e must be finite and non-negative"
        );
        cfg.solver.pin_delta_e = Some(pin);
    }
    if let Some(dt) = cli.dt {
        cfg.sim.dt = Some(dt);
    }
    if let Some(c) = cli.horizon_cycles {
        cfg.sim.horizon_cycles = c;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn diagnostics(e: &PlanError) -> String {
    match e {
        PlanError::NoFeasiblePlan(diags) => {
            let mut s = format!("{e}\n");
            for d in diags {
                s.push_str(&format!("  a1={} a2={}: {}\n", d.a1, d.a2, d.reason));
            }
            s
        }
        other => other.to_string(),
    }
}

fn write_summary<W: Write>(mut w: W, plan: &SupercyclePlan, cfg: &RunConfig) -> std::io::Result<()> {
    let fleet = cfg.fleet();
    writeln!(w, "a1: {}", plan.a1)?;
    writeln!(w, "a2: {}", plan.a2)?;
    writeln!(w, "partitions: {}", plan.partitions.len())?;
    writeln!(w, "teams: {}", fleet.m)?;
    writeln!(w, "uavs_per_team: {}", fleet.uavs_per_team())?;
    writeln!(w, "delta_e: {}", plan.delta_e)?;
    writeln!(w, "tour_delta_e: {}", plan.tour_delta_e)?;
    writeln!(w, "delta_e_pinned: {}", plan.pinned)?;
    writeln!(w, "feasible: {}", plan.feasible)?;
    writeln!(w, "period: {}", plan.period)?;
    writeln!(w, "period_per_team: {}", plan.team_spacing(&fleet))?;
    writeln!(w, "centroid_tour_length: {}", plan.centroid_tour_length)?;
    writeln!(w, "centroid_tour_exact: {}", plan.centroid_tour_exact)?;
    writeln!(w, "uav_tours_exact: {}", plan.assignments.iter().all(|a| a.exact))?;
    let order: Vec<String> = plan.partition_order.iter().map(|p| p.to_string()).collect();
    writeln!(w, "partition_order: {}", order.join(" "))?;
    Ok(())
}

fn cmd_plan(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let grid = cfg.grid()?;
    let fleet = cfg.fleet();
    let opts = cfg.plan_options();

    let plan = match cfg.solver.partition {
        Some([a1, a2]) => build_plan(&grid, &fleet, a1, a2, &opts).map_err(|e| Failure::Usage(e.into()))?,
        None => match optimize_partition_size(&grid, &fleet, &opts) {
            Ok((plan, _)) => plan,
            Err(e @ PlanError::NoFeasiblePlan(_)) => return Err(Failure::Infeasible(diagnostics(&e))),
            Err(e) => return Err(Failure::Usage(e.into())),
        },
    };
    if !plan.feasible {
        return Err(Failure::Infeasible(format!(
            "a1={} a2={}: delta_e {} exceeds e_bar {}",
            plan.a1, plan.a2, plan.delta_e, fleet.e_bar
        )));
    }
    let dep = deploy(&plan, &grid, &fleet).map_err(|e| {
        Failure::Infeasible(format!(
            "{e}; the energy budget {} is shorter than the longest tour ({})",
            plan.delta_e, plan.tour_delta_e
        ))
    })?;

    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = create(&dir, "plan.json")?;
    serde_json::to_writer_pretty(
        &mut w,
        &PlanArtifact {
            config: cfg.clone(),
            plan: plan.clone(),
        },
    )
    .context("writing plan.json")?;
    w.flush()?;
    let mut w = create(&dir, "trajectories.csv")?;
    dep.write_csv(&mut w)?;
    w.flush()?;
    fs::write(dir.join("plan.svg"), svg::render(&plan, &grid))?;
    let mut w = create(&dir, "plan_summary.txt")?;
    write_summary(&mut w, &plan, &cfg)?;
    w.flush()?;

    write_summary(std::io::stdout().lock(), &plan, &cfg)?;
    Ok(())
}

fn write_sweep<W: Write>(mut w: W, rows: &[Candidate], best: Option<usize>) -> std::io::Result<()> {
    writeln!(w, "a1,a2,partitions,delta_e,feasible,period,optimal")?;
    for (i, c) in rows.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.a1,
            c.a2,
            c.partitions,
            c.delta_e,
            c.feasible,
            c.period,
            best == Some(i)
        )?;
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let grid = cfg.grid()?;
    let fleet = cfg.fleet();
    let opts = cfg.plan_options();
    let space = search_space(&grid, opts.divisors_only);
    let rows = sweep(&grid, &fleet, &space, &opts).map_err(|e| Failure::Usage(e.into()))?;
    let best = select_best(&rows);

    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = create(&dir, "sweep.csv")?;
    write_sweep(&mut w, &rows, best)?;
    w.flush()?;
    match best {
        Some(i) => {
            let c = &rows[i];
            println!(
                "optimum: a1={} a2={} partitions={} delta_e={} period={}",
                c.a1, c.a2, c.partitions, c.delta_e, c.period
            );
        }
        None => println!("no feasible partition size among {} candidates", rows.len()),
    }
    println!("wrote {}", dir.join("sweep.csv").display());
    Ok(())
}

fn cmd_simulate(cli: &Cli) -> Result<(), Failure> {
    let cfg_arg = match &cli.config {
        Some(_) => Some(load_config(cli)?),
        None => None,
    };
    let dir = out_dir(cli, cfg_arg.as_ref());
    let path = dir.join("plan.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {} (run `plan` first)", path.display()))?;
    let artifact: PlanArtifact = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut cfg = artifact.config;
    if let Some(c) = &cfg_arg {
        cfg.sim = c.sim.clone();
    }
    if let Some(dt) = cli.dt {
        cfg.sim.dt = Some(dt);
    }
    if let Some(c) = cli.horizon_cycles {
        cfg.sim.horizon_cycles = c;
    }
    let grid = cfg.grid()?;
    let fleet = cfg.fleet();
    let plan = artifact.plan;

    let dep = deploy(&plan, &grid, &fleet).map_err(|e| Failure::Infeasible(e.to_string()))?;
    let mut sim_cfg = SimConfig::for_deployment(&dep, &grid, cfg.sim.horizon_cycles);
    if let Some(dt) = cfg.sim.dt {
        sim_cfg.dt = dt;
    }
    if let Some(tol) = cfg.sim.node_tolerance {
        sim_cfg.node_tolerance = tol;
    }
    let outcome = sim::run(&dep, &grid, &fleet, &sim_cfg).map_err(|e| Failure::Usage(e.into()))?;

    fs::create_dir_all(&dir)?;
    let mut w = create(&dir, "events.csv")?;
    outcome.log.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&dir, "sim_report.txt")?;
    outcome.report.write_text(&mut w)?;
    w.flush()?;
    outcome.report.write_text(std::io::stdout().lock())?;

    let r = &outcome.report;
    if let Some(f) = &r.fault {
        return Err(Failure::Safety(format!(
            "uav {} reached energy {} at t={}",
            f.uav, f.energy, f.t
        )));
    }
    if r.violation_count > 0 {
        let first = &r.violations[0];
        return Err(Failure::Safety(format!(
            "{} constraint violations, first {:?} on vehicle {} at t={}",
            r.violation_count, first.kind, first.vehicle, first.t
        )));
    }
    Ok(())
}

fn cmd_report(cli: &Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(_) => Some(load_config(cli)?),
        None => None,
    };
    let dir = out_dir(cli, cfg.as_ref());
    let mut found = false;
    for (title, name) in [("plan", "plan_summary.txt"), ("simulation", "sim_report.txt")] {
        let path = dir.join(name);
        if let Ok(text) = fs::read_to_string(&path) {
            println!("== {title} ({}) ==", path.display());
            print!("{text}");
            found = true;
        }
    }
    if !found {
        return Err(Failure::Usage(anyhow::anyhow!(
            "no plan or simulation summary in {}",
            dir.display()
        )));
    }
    Ok(())
}
