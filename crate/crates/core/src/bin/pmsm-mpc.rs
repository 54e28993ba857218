//! Command-line front end for the closed-loop harness.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pmsm_mpc::harness::{
    ablation_sweep, builtin, builtin_names, compare_lp_qp, efficiency_report, run_scenario, Scenario, SimResult,
    SolverSelection,
};
use pmsm_mpc::motor::{rpm, to_rpm};
use pmsm_mpc::{ControllerConfig, Error, MotorParams, SolverKind};

#[derive(Parser)]
#[command(name = "pmsm-mpc", version, about = "Flatness-based MPC for a PMSM: simulate, compare and sweep")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write one CSV trace per solver.
    Run {
        /// scenario TOML file or builtin name
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario with the LP and the reference QP and summarize the gap.
    Compare {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-loop cost over a grid of horizons and loss weights.
    Sweep {
        #[arg(long, default_value = "fig8d")]
        scenario: String,
        /// horizon lengths in ms
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,5")]
        horizons: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        weights: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Steady-state efficiency table over speeds.
    Report {
        /// speeds in rpm
        #[arg(long, value_delimiter = ',', default_value = "0,500,1000,1500,2000,2200")]
        speeds: Vec<f64>,
        /// torque reference in Nm, rated torque when omitted
        #[arg(long)]
        torque: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Output location: a directory for `run` and `compare`, a CSV file for
    /// `sweep` and `report` (stdout when omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// lp, qp or both; overrides the scenario's choice
    #[arg(long)]
    solver: Option<SolverSelection>,
    /// Parameter override. Bare names and `controller.` set controller
    /// options, `plant.` the simulated machine, `model.` the controller's
    /// machine model. Booleans take 0 or 1.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, f64)>,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("`{value}`: {e}"))?;
    Ok((name.trim().to_string(), value))
}

/// Scenario plus the model and controller defaults it runs against.
struct Setup {
    scenario: Scenario,
    model: MotorParams,
    cfg: ControllerConfig,
}

fn load_scenario(source: &str) -> pmsm_mpc::Result<Scenario> {
    if Path::new(source).exists() {
        return Scenario::load(source);
    }
    builtin(source).map_err(|_| {
        Error::Scenario(format!("`{source}` is neither a file nor a builtin ({})", builtin_names().join(", ")))
    })
}

fn setup(source: &str, common: &Common) -> pmsm_mpc::Result<Setup> {
    let mut scenario = load_scenario(source)?;
    let mut model = MotorParams::default();
    let cfg = ControllerConfig::default();
    for (name, value) in &common.set {
        match name.split_once('.') {
            Some(("plant", field)) => {
                scenario.plant.insert(field.to_string(), *value);
            }
            Some(("model", field)) => model.set(field, *value)?,
            Some(("controller", field)) => {
                scenario.controller.insert(field.to_string(), *value);
            }
            None => {
                scenario.controller.insert(name.clone(), *value);
            }
            Some((prefix, _)) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown prefix `{prefix}` (controller, plant or model)"
                )))
            }
        }
    }
    model.validate()?;
    if let Some(s) = common.solver {
        scenario.solver = s;
    }
    scenario.validate()?;
    Ok(Setup { scenario, model, cfg })
}

/// Outcome of a subcommand: clean, or with invariant violations.
enum Status {
    Clean,
    Violations(usize),
}

fn report_result(res: &SimResult) -> usize {
    let s = &res.stats;
    println!(
        "{} [{:?}]: {} samples, max {} iterations (bound {}), {} fallbacks, {} violations",
        res.trace.scenario,
        res.trace.solver,
        res.trace.rows.len(),
        s.max_iterations,
        s.work_bound,
        s.fallbacks,
        res.violations.len()
    );
    for v in res.violations.iter().take(10) {
        eprintln!("  violation: {v}");
    }
    if res.violations.len() > 10 {
        eprintln!("  ... {} more", res.violations.len() - 10);
    }
    res.violations.len()
}

fn trace_path(dir: &Path, res: &SimResult) -> PathBuf {
    let solver = format!("{:?}", res.trace.solver).to_lowercase();
    dir.join(format!("{}-{solver}.csv", res.trace.scenario))
}

fn save_traces(dir: Option<&Path>, results: &[&SimResult]) -> pmsm_mpc::Result<()> {
    let dir = dir.unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    for res in results {
        let path = trace_path(dir, res);
        res.trace.save(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn table_writer(out: Option<&Path>) -> pmsm_mpc::Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn run(source: &str, common: &Common) -> pmsm_mpc::Result<Status> {
    let Setup { scenario, model, cfg } = setup(source, common)?;
    let results = run_scenario(&scenario, &cfg, &model)?;
    let violations: usize = results.iter().map(report_result).sum();
    save_traces(common.out.as_deref(), &results.iter().collect::<Vec<_>>())?;
    Ok(if violations == 0 { Status::Clean } else { Status::Violations(violations) })
}

fn compare(source: &str, common: &Common) -> pmsm_mpc::Result<Status> {
    let Setup { scenario, model, cfg } = setup(source, common)?;
    let rep = compare_lp_qp(&scenario, &cfg, &model)?;
    let violations = report_result(&rep.lp) + report_result(&rep.qp);
    let min_excess = rep.per_cycle_excess.iter().copied().fold(f64::INFINITY, f64::min);
    println!("per-cycle J_LP - J_QP: min {min_excess:.3e}, integral {:.3e}", rep.excess_integral);
    println!("median relative excess: {:.3e}", rep.median_relative_excess);
    for (name, e) in [("LP", rep.lp_excursion), ("QP", rep.qp_excursion)] {
        println!(
            "{name} i_d excursion: depth {:.3} A, duration {:.3} ms (steady {:.3} A)",
            e.depth,
            1e3 * e.duration,
            e.steady_id
        );
    }
    println!("max trace difference: {:.3e}", rep.max_trace_difference);
    if common.out.is_some() {
        save_traces(common.out.as_deref(), &[&rep.lp, &rep.qp])?;
    }
    Ok(if violations == 0 { Status::Clean } else { Status::Violations(violations) })
}

fn single_solver(s: SolverSelection) -> pmsm_mpc::Result<SolverKind> {
    match s.kinds()[..] {
        [kind] => Ok(kind),
        _ => Err(Error::InvalidParameter("this command runs a single solver".into())),
    }
}

fn sweep(source: &str, horizons: &[f64], weights: &[f64], common: &Common) -> pmsm_mpc::Result<Status> {
    let Setup { scenario, model, cfg } = setup(source, common)?;
    let mut cfg = scenario.controller_config(&cfg)?;
    cfg.solver = single_solver(scenario.solver)?;
    let horizons: Vec<f64> = horizons.iter().map(|ms| ms * 1e-3).collect();
    let rows = ablation_sweep(&scenario, &cfg, &model, &horizons, weights)?;
    let mut w = table_writer(common.out.as_deref())?;
    w.write_record(["horizon_ms", "loss_weight", "cost", "control_error", "energy_lost", "max_iterations"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.horizon * 1e3),
            format!("{}", r.loss_weight),
            format!("{:.6e}", r.cost),
            format!("{:.6e}", r.control_error),
            format!("{:.6e}", r.energy_lost),
            r.max_iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(Status::Clean)
}

fn report(speeds: &[f64], torque: Option<f64>, common: &Common) -> pmsm_mpc::Result<Status> {
    let mut model = MotorParams::default();
    let mut cfg = ControllerConfig::default();
    for (name, value) in &common.set {
        match name.split_once('.') {
            // one machine serves as plant and model here
            Some(("plant" | "model", field)) => model.set(field, *value)?,
            Some(("controller", field)) => cfg.set(field, *value)?,
            None => cfg.set(name, *value)?,
            Some((prefix, _)) => return Err(Error::InvalidParameter(format!("unknown prefix `{prefix}`"))),
        }
    }
    model.validate()?;
    cfg.validate()?;
    if let Some(s) = common.solver {
        cfg.solver = single_solver(s)?;
    }
    let tau = torque.unwrap_or(model.tau_rated);
    let mut w = table_writer(common.out.as_deref())?;
    w.write_record(["speed_rpm", "torque", "id_closed_loop", "id_analytic", "iq", "loss", "loss_zero_id", "improvement"])?;
    for &speed in speeds {
        let r = efficiency_report(rpm(speed), tau, &model, &cfg)?;
        w.write_record([
            format!("{}", to_rpm(r.omega).round()),
            format!("{}", r.tau),
            format!("{:.5}", r.id_closed_loop),
            format!("{:.5}", r.id_analytic),
            format!("{:.5}", r.iq),
            format!("{:.3}", r.loss_optimized),
            format!("{:.3}", r.loss_zero_id),
            format!("{:.5}", r.improvement),
        ])?;
    }
    w.flush()?;
    Ok(Status::Clean)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { scenario, common } => run(scenario, common),
        Command::Compare { scenario, common } => compare(scenario, common),
        Command::Sweep { scenario, horizons, weights, common } => sweep(scenario, horizons, weights, common),
        Command::Report { speeds, torque, common } => report(speeds, *torque, common),
    };
    match outcome {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Violations(n)) => {
            eprintln!("error: {n} invariant violations");
            ExitCode::from(1)
        }
        Err(e @ Error::Diverged { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
