//! Pipeline behind the `recipro` binary.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 certification failure
//! (an assumption is violated or the cluster/rendezvous prediction does
//! not hold).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::clustering::{analyze_limits, classify_persistence, doubling_horizons, ClusterReport, DEFAULT_THETA};
use crate::dynamics::{propagate, Trajectory, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::reciprocity::certify_schedule;
use crate::rendezvous::{
    check_reciprocity_instantiation, check_rendezvous, simulate as simulate_robots, PlanarTrajectory, RobotScenario,
    ScenarioFile, STEP_DIVISOR,
};
use crate::schedules::{ScheduleGenerator, WeightSchedule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CERTIFICATION: i32 = 2;

pub const BUILTINS: [&str; 4] = ["example1", "example2", "oscillator", "robots8"];
/// Seed of `robots8` when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 1;
pub const ROBOTS8_HORIZON: f64 = 500.0;
/// Number of doubling levels used for persistence classification.
const PERSISTENCE_LEVELS: usize = 4;
/// Tail fraction for the rendezvous verdict.
const RENDEZVOUS_TAIL: f64 = 0.1;

#[derive(Parser, Debug)]
#[command(name = "recipro", version, about = "Consensus under non-instantaneous reciprocity")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Propagate a weight schedule and write the trajectory.
    Simulate(Common),
    /// Certify cut-balance, mass bound and pairwise reciprocity.
    Certify(Common),
    /// Predict clusters from persistent edges and check them on a trajectory.
    Cluster(Common),
    /// Simulate robots and check practical rendezvous.
    Rendezvous(Common),
    /// Run a builtin scenario end to end.
    Example(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Schedule JSON (simulate/certify/cluster) or robot scenario JSON (rendezvous).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Builtin: example1, example2, oscillator, robots8.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Robot integration step (default delta_min / 20).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    tol_conv: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol_cluster: f64,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[arg(long)]
    jobs: Option<usize>,
    /// Initial state, comma separated (scalar schedules only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Certify,
    Cluster,
    Rendezvous,
    Example,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub scenario: Option<PathBuf>,
    pub name: Option<String>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub tol_conv: f64,
    pub tol_cluster: f64,
    pub theta: f64,
    pub jobs: Option<usize>,
    pub x0: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            scenario: None,
            name: None,
            horizon: None,
            step: None,
            seed: None,
            out: out.into(),
            tol_conv: 1e-3,
            tol_cluster: 1e-3,
            theta: DEFAULT_THETA,
            jobs: None,
            x0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.tol_conv > 0.0 && self.tol_cluster > 0.0 && self.theta > 0.0) {
            return usage("tolerances and theta must be positive");
        }
        if self.horizon.is_some_and(|h| !(h > 0.0)) {
            return usage("horizon must be positive");
        }
        match (&self.scenario, &self.name) {
            (Some(_), Some(_)) => return usage("give either --scenario or --name, not both"),
            (None, None) => return usage("one of --scenario or --name is required"),
            (Some(p), None) if !p.exists() => {
                return Err(Error::InvalidArgument(format!("scenario file {} does not exist", p.display())))
            }
            (None, Some(n)) if !BUILTINS.contains(&n.as_str()) => {
                return Err(Error::InvalidArgument(format!("unknown builtin '{n}'; expected one of {BUILTINS:?}")))
            }
            _ => {}
        }
        if self.command == Command::Example && self.name.is_none() {
            return usage("example needs --name");
        }
        Ok(())
    }
}

/// Parse command-line arguments (including the program name).
pub fn parse_args<I, T>(args: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (command, c) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Certify(c) => (Command::Certify, c),
        Sub::Cluster(c) => (Command::Cluster, c),
        Sub::Rendezvous(c) => (Command::Rendezvous, c),
        Sub::Example(c) => (Command::Example, c),
    };
    Ok(RunConfig {
        command,
        scenario: c.scenario,
        name: c.name,
        horizon: c.horizon,
        step: c.step,
        seed: c.seed,
        out: c.out,
        tol_conv: c.tol_conv,
        tol_cluster: c.tol_cluster,
        theta: c.theta,
        jobs: c.jobs,
        x0: c.x0,
    })
}

/// Builtin scalar scenario: schedule, initial state and default horizon.
pub fn builtin_schedule(name: &str, horizon: Option<f64>) -> Result<(WeightSchedule, Vec<f64>, f64)> {
    let (generator, x0, default_horizon) = match name {
        "example1" => (ScheduleGenerator::Example1, vec![0.0, 1.0, 2.0, 3.0], 2000.0),
        "example2" => (ScheduleGenerator::Example2, vec![0.0, 1.0, 2.0, 3.0], 2000.0),
        "oscillator" => (ScheduleGenerator::oscillator_default(), vec![0.0, 0.5, 1.0], 800.0),
        other => return Err(Error::InvalidArgument(format!("'{other}' is not a scalar builtin"))),
    };
    let h = horizon.unwrap_or(default_horizon);
    Ok((generator.materialize(h)?, x0, h))
}

/// Builtin robot scenario with its default horizon and step.
pub fn builtin_robots(name: &str, seed: Option<u64>) -> Result<(RobotScenario, f64, f64)> {
    match name {
        "robots8" => {
            let s = RobotScenario::robots8(seed.unwrap_or(DEFAULT_SEED));
            let step = s.delta_min / STEP_DIVISOR;
            Ok((s, ROBOTS8_HORIZON, step))
        }
        other => Err(Error::InvalidArgument(format!("'{other}' is not a robot builtin"))),
    }
}

fn load_schedule(cfg: &RunConfig) -> Result<(WeightSchedule, Vec<f64>, f64)> {
    let (schedule, default_x0, horizon) = match (&cfg.scenario, &cfg.name) {
        (Some(path), _) => {
            let s = WeightSchedule::load(path)?;
            let h = cfg.horizon.unwrap_or(s.horizon());
            let s = match s.generator() {
                Some(g) if h > s.horizon() => g.materialize(h)?.with_hint(s.hint().clone()),
                _ => s,
            };
            let x0 = (0..s.n()).map(|i| i as f64).collect();
            (s, x0, h)
        }
        (None, Some(name)) => builtin_schedule(name, cfg.horizon)?,
        (None, None) => return Err(Error::InvalidArgument("no scenario given".into())),
    };
    if horizon > schedule.horizon() {
        return Err(Error::OutOfRange { t: horizon, start: schedule.start(), end: schedule.horizon() });
    }
    let x0 = cfg.x0.clone().unwrap_or(default_x0);
    Ok((schedule, x0, horizon))
}

fn load_robots(cfg: &RunConfig) -> Result<(RobotScenario, f64, f64)> {
    let (mut scenario, horizon, step) = match (&cfg.scenario, &cfg.name) {
        (Some(path), _) => {
            let mut file = ScenarioFile::load(path)?;
            if let Some(seed) = cfg.seed {
                file.seed = seed;
            }
            let s = file.scenario()?;
            let step = file.step.unwrap_or(s.delta_min / STEP_DIVISOR);
            (s, file.horizon.unwrap_or(ROBOTS8_HORIZON), step)
        }
        (None, Some(name)) => builtin_robots(name, cfg.seed)?,
        (None, None) => return Err(Error::InvalidArgument("no scenario given".into())),
    };
    if let Some(seed) = cfg.seed {
        scenario.seed = seed;
    }
    Ok((scenario, cfg.horizon.unwrap_or(horizon), cfg.step.unwrap_or(step)))
}

/// Long-format CSV `t,agent,component,value` (agents 1-based, component `x`).
pub fn emit_plot_data(trajectory: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_long(&trajectory.times, &[("x", trajectory)], path)
}

/// Long-format CSV of a planar run, components `x` and `y`.
pub fn emit_planar_plot_data(trajectory: &PlanarTrajectory, path: impl AsRef<Path>) -> Result<()> {
    let (cx, cy) = (trajectory.component(0), trajectory.component(1));
    write_long(&trajectory.times, &[("x", &cx), ("y", &cy)], path)
}

fn write_long(times: &[f64], comps: &[(&str, &Trajectory)], path: impl AsRef<Path>) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("cannot plot an empty trajectory".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "agent", "component", "value"])?;
    for (m, t) in times.iter().enumerate() {
        for (label, tr) in comps {
            for (i, v) in tr.states[m].iter().enumerate() {
                w.write_record([format!("{t:.16e}"), (i + 1).to_string(), label.to_string(), format!("{v:.16e}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: PathBuf) -> Result<()> {
    std::fs::write(&path, serde_json::to_string_pretty(value)?)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn members_1based(components: &[Vec<usize>]) -> String {
    let parts: Vec<String> = components
        .iter()
        .map(|c| format!("{{{}}}", c.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    parts.join(" ")
}

/// Whether the run certified everything it checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Passed
    } else {
        Outcome::Failed
    }
}

fn run_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let (schedule, x0, horizon) = load_schedule(cfg)?;
    let tr = propagate(&schedule, &x0, schedule.start().max(0.0).min(horizon), horizon, DEFAULT_TOL)?;
    tr.save_csv(cfg.out.join("trajectory.csv"))?;
    emit_plot_data(&tr, cfg.out.join("plot.csv"))?;
    let (t, x) = tr.last().expect("non-empty trajectory");
    eprintln!("simulated {} samples to t = {t}; final state {:?}", tr.len(), x.as_slice());
    Ok(Outcome::Passed)
}

fn run_certify(cfg: &RunConfig) -> Result<Outcome> {
    let (schedule, _, horizon) = load_schedule(cfg)?;
    let report = certify_schedule(&schedule, horizon, None)?;
    write_json(&report, cfg.out.join("certification.json"))?;
    eprintln!(
        "K = {}, M = {}, eps = {}, T = {}, pairs violating reciprocity: {}",
        report.assumption1.k.map_or("infeasible".to_string(), |k| k.to_string()),
        report.assumption2.m,
        report.assumption3.epsilon,
        report.assumption3.t,
        report.assumption3.violations.len()
    );
    Ok(outcome(report.passed()))
}

fn run_cluster(cfg: &RunConfig) -> Result<Outcome> {
    let (schedule, x0, horizon) = load_schedule(cfg)?;
    let t0 = schedule.start().max(0.0).min(horizon);
    let tr = propagate(&schedule, &x0, t0, horizon, DEFAULT_TOL)?;
    tr.save_csv(cfg.out.join("trajectory.csv"))?;
    emit_plot_data(&tr, cfg.out.join("plot.csv"))?;
    let graph = classify_persistence(&schedule, &doubling_horizons(horizon, PERSISTENCE_LEVELS), cfg.theta)?;
    let limits = analyze_limits(&tr, &graph.components, cfg.tol_conv, cfg.tol_cluster)?;
    let report = ClusterReport::new(&graph, &limits);
    write_json(&report, cfg.out.join("cluster_report.json"))?;
    eprintln!(
        "components {}; spreads {:?}; converged {:?}",
        members_1based(&report.components),
        report.spreads,
        report.converged
    );
    if !report.path_reciprocal {
        eprintln!("warning: persistent graph has a one-way path; clusters are not isolated");
    }
    Ok(outcome(report.passed && report.path_reciprocal))
}

#[derive(Serialize)]
struct RendezvousOutput<'a> {
    scenario: ScenarioFile,
    rendezvous: &'a crate::rendezvous::RendezvousReport,
    reciprocity: &'a crate::rendezvous::InstantiationReport,
}

fn run_rendezvous(cfg: &RunConfig) -> Result<Outcome> {
    let (scenario, horizon, step) = load_robots(cfg)?;
    let tr = simulate_robots(&scenario, horizon, step)?;
    tr.save_csv(cfg.out.join("trajectory.csv"))?;
    tr.save_log(cfg.out.join("interactions.jsonl"))?;
    emit_planar_plot_data(&tr, cfg.out.join("plot.csv"))?;
    let rv = check_rendezvous(&tr, &scenario, RENDEZVOUS_TAIL)?;
    let rc = check_reciprocity_instantiation(&tr, &scenario)?;
    let file = ScenarioFile::from_scenario(&scenario, Some(horizon), Some(step));
    file.save(cfg.out.join("scenario.json"))?;
    write_json(&RendezvousOutput { scenario: file, rendezvous: &rv, reciprocity: &rc }, cfg.out.join("rendezvous_report.json"))?;
    eprintln!(
        "diameter {:.4} -> {:.4} (threshold {:.4}); limit exists: {}; reciprocity violations: {}",
        rv.initial_diameter,
        rv.final_diameter,
        rv.threshold,
        rv.limit_exists,
        rc.violations.len()
    );
    Ok(outcome(rv.pass && rv.limit_exists && rc.is_clean()))
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let robots = cfg.name.as_deref() == Some("robots8");
    match cfg.command {
        Command::Simulate if robots => run_rendezvous(cfg),
        Command::Simulate => run_simulate(cfg),
        Command::Certify => run_certify(cfg),
        Command::Cluster => run_cluster(cfg),
        Command::Rendezvous => run_rendezvous(cfg),
        Command::Example if robots => run_rendezvous(cfg),
        Command::Example => {
            let (schedule, _, _) = load_schedule(cfg)?;
            schedule.save(cfg.out.join("schedule.json"))?;
            run_cluster(cfg)
        }
    }
}

/// Run one command and map the result to an exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let go = || dispatch(cfg);
    let result = match cfg.jobs {
        Some(j) if j > 0 => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(go),
            Err(e) => Err(Error::InvalidArgument(format!("cannot build thread pool: {e}"))),
        },
        _ => go(),
    };
    match result {
        Ok(Outcome::Passed) => EXIT_OK,
        Ok(Outcome::Failed) => EXIT_CERTIFICATION,
        Err(e @ (Error::AssumptionViolated { .. } | Error::InternalCase0 { .. })) => {
            eprintln!("certification failed: {e}");
            EXIT_CERTIFICATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cfg = parse_args([
            "recipro", "example", "--name", "example1", "--horizon", "100", "--out", "/tmp/x", "--x0", "-1,2",
        ])
        .unwrap();
        assert_eq!(cfg.command, Command::Example);
        assert_eq!(cfg.name.as_deref(), Some("example1"));
        assert_eq!(cfg.horizon, Some(100.0));
        assert_eq!(cfg.x0, Some(vec![-1.0, 2.0]));
        assert_eq!(cfg.tol_conv, 1e-3);
        assert!(parse_args(["recipro", "bogus"]).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::new(Command::Certify, "/tmp");
        assert!(cfg.validate().is_err());
        cfg.name = Some("nope".into());
        assert!(cfg.validate().is_err());
        cfg.name = Some("example2".into());
        assert!(cfg.validate().is_ok());
        cfg.tol_conv = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn plot_rows() {
        let dir = tempfile::tempdir().unwrap();
        let tr = Trajectory { times: vec![0.0], states: vec![nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0])] };
        let path = dir.path().join("p.csv");
        emit_plot_data(&tr, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 3);
        assert!(text.lines().nth(2).unwrap().starts_with("0.0000000000000000e0,2,x,"));
        let empty = Trajectory { times: vec![], states: vec![] };
        assert!(emit_plot_data(&empty, dir.path().join("e.csv")).is_err());
    }
}
