//! `vscfault` command line.
//!
//! Exit codes: 0 when an equilibrium is found, 2 when none exists, 1 on
//! input or usage errors.

use super::case::{load_case, load_scenario, Case, Scenario};
use super::records::{render_records, ResultRecord};
use super::table::{render_oracle, render_outcome};
use super::IoError;
use crate::network::{BusId, FaultKind, FaultSpec};
use crate::saturation::{exhaustive_oracle, run_algorithm, sweep, Execution, ENUMERATION_CAP};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

pub const EXIT_FOUND: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_EQUILIBRIUM: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vscfault", version, about = "Short-circuit equilibria of converter-dominated networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for the short-circuit equilibrium of one fault.
    Solve(RunArgs),
    /// Solve every saturation-state combination and list all equilibria.
    Oracle(RunArgs),
    /// Equilibrium without a fault.
    Prefault(CommonArgs),
    /// Solve a grid of fault cases: buses × fault types × fault impedances.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    #[value(name = "3p2g")]
    ThreePhaseToGround,
    #[value(name = "p2p")]
    PhaseToPhase,
    #[value(name = "1p2g")]
    SinglePhaseToGround,
    None,
}

impl From<FaultArg> for FaultKind {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::ThreePhaseToGround => FaultKind::ThreePhaseToGround,
            FaultArg::PhaseToPhase => FaultKind::PhaseToPhase,
            FaultArg::SinglePhaseToGround => FaultKind::SinglePhaseToGround,
            FaultArg::None => FaultKind::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Case file, or `builtin:test_system_1` / `builtin:test_system_2`.
    #[arg(long)]
    pub case: String,
    /// Extra buses and branches appended to the case.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    /// Scenario file with fault and solver settings.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Residual tolerance (infinity norm).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Outer iteration limit.
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Disable the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub fault_bus: Option<String>,
    #[arg(long, value_enum)]
    pub fault_type: Option<FaultArg>,
    /// Fault impedance, e.g. `0.1j` or `0.01+0.05j`.
    #[arg(long, value_parser = parse_complex)]
    pub zft: Option<Complex64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fault bus; every bus when omitted and the scenario names none.
    #[arg(long)]
    pub fault_bus: Option<String>,
    /// Fault types; all three when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub fault_type: Vec<FaultArg>,
    /// Fault impedances, comma separated or repeated.
    #[arg(long, value_parser = parse_complex, value_delimiter = ',')]
    pub zft: Vec<Complex64>,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&compact).map_err(|_| format!("`{s}` is not a complex number"))
}

struct Loaded {
    case: Case,
    scenario: Scenario,
    exec: Execution,
}

fn load(args: &CommonArgs) -> Result<Loaded, IoError> {
    let builtin = |name: &str| {
        let bare = name.strip_prefix("builtin:").unwrap_or(name);
        let is_file = std::path::Path::new(name).exists();
        match bare {
            "test_system_1" | "test_system_2" if !is_file => Some(format!("builtin:{bare}")),
            _ => None,
        }
    };
    let resolved = builtin(&args.case).unwrap_or_else(|| args.case.clone());
    let case = match resolved.as_str() {
        "builtin:test_system_1" => {
            if args.topology.is_some() {
                return Err(IoError::Usage("--topology cannot extend test_system_1".into()));
            }
            Case::test_system_1()
        }
        "builtin:test_system_2" => match &args.topology {
            Some(t) => load_case_params_text(super::case::TEST_SYSTEM_2_PARAMS, t)?,
            None => Case::test_system_2(),
        },
        path => load_case(path.as_ref(), args.topology.as_deref())?,
    };
    let mut scenario = match &args.scenario {
        Some(p) => load_scenario(p)?,
        None => Scenario::default(),
    };
    if let Some(t) = args.tol {
        if !t.is_finite() || t <= 0.0 {
            return Err(IoError::Usage("--tol must be positive".into()));
        }
        scenario.options.solve.tol_residual = t;
    }
    if let Some(m) = args.max_outer {
        if m == 0 {
            return Err(IoError::Usage("--max-outer must be at least 1".into()));
        }
        scenario.options.max_outer = Some(m);
    }
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    Ok(Loaded { case, scenario, exec })
}

fn load_case_params_text(params: &str, topology: &std::path::Path) -> Result<Case, IoError> {
    let topo = std::fs::read_to_string(topology).map_err(|source| IoError::Read { path: topology.into(), source })?;
    super::case::parse_case_with_topology(params, &topo, "test_system_2")
}

fn missing_impedance() -> IoError {
    IoError::Usage("no fault impedance: pass --zft or a scenario with [fault]".into())
}

fn fault_from(run: &RunArgs, case: &Case, scenario: &Scenario) -> Result<FaultSpec, IoError> {
    let base = scenario.fault.clone();
    let kind = run.fault_type.map(Into::into).or_else(|| base.as_ref().map(|f| f.kind)).unwrap_or(FaultKind::ThreePhaseToGround);
    let z_ft = match run.zft.or_else(|| base.as_ref().map(|f| f.z_ft)) {
        Some(z) => z,
        None if kind == FaultKind::None => Complex64::default(),
        None => return Err(missing_impedance()),
    };
    let bus = run.fault_bus.clone().map(BusId).or_else(|| base.as_ref().map(|f| f.bus.clone()));
    let bus = match (bus, kind) {
        (Some(b), _) => b,
        (None, FaultKind::None) => case.system.network.buses[0].id.clone(),
        (None, _) => return Err(IoError::Usage("no fault bus: pass --fault-bus or a scenario with [fault]".into())),
    };
    Ok(FaultSpec { bus, kind, z_ft })
}

fn emit(common: &CommonArgs, text: &str, out: &mut dyn Write) -> Result<(), IoError> {
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|source| IoError::Write { path: path.clone(), source }),
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| IoError::Write { path: PathBuf::from("<stdout>"), source }),
    }
}

fn check_bus(case: &Case, bus: &BusId) -> Result<(), IoError> {
    match case.system.network.bus_index(bus) {
        Some(_) => Ok(()),
        None => Err(IoError::Usage(format!("fault bus `{bus}` is not in the case"))),
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, IoError> {
    match cli.command {
        Command::Solve(run) => {
            let l = load(&run.common)?;
            let fault = fault_from(&run, &l.case, &l.scenario)?;
            check_bus(&l.case, &fault.bus)?;
            let t0 = Instant::now();
            let model = l.case.fault_ready(&l.scenario.options)?;
            let outcome = run_algorithm(&model, &fault, &l.scenario.options)?;
            let wall = t0.elapsed();
            let text = match run.common.format {
                Format::Table => render_outcome(&l.case.name, &model, &fault, &outcome, Some(wall)),
                Format::Records => render_records(&[ResultRecord::new(&l.case.name, &model, &fault, &outcome)]),
            };
            emit(&run.common, &text, out)?;
            Ok(if outcome.found() { EXIT_FOUND } else { EXIT_NO_EQUILIBRIUM })
        }
        Command::Oracle(run) => {
            let l = load(&run.common)?;
            let fault = fault_from(&run, &l.case, &l.scenario)?;
            check_bus(&l.case, &fault.bus)?;
            let model = l.case.fault_ready(&l.scenario.options)?;
            let report = exhaustive_oracle(&model, &fault, &l.scenario.options.solve, l.exec, ENUMERATION_CAP)?;
            let text = match run.common.format {
                Format::Table => render_oracle(&l.case.name, &fault, &report),
                Format::Records => {
                    let lines: Vec<String> = report
                        .equilibria()
                        .map(|e| {
                            let p = e.point.clone().expect("equilibrium carries a point");
                            let outcome = crate::saturation::AlgorithmOutcome {
                                termination: crate::saturation::Termination::FixedPoint,
                                equilibrium: Some(p),
                                trace: Vec::new(),
                                tested: vec![e.f],
                                total_combinations: report.entries.len(),
                            };
                            ResultRecord::new(&l.case.name, &model, &fault, &outcome).to_line()
                        })
                        .collect();
                    lines.iter().map(|l| format!("{l}\n")).collect()
                }
            };
            emit(&run.common, &text, out)?;
            Ok(if report.equilibria().next().is_some() { EXIT_FOUND } else { EXIT_NO_EQUILIBRIUM })
        }
        Command::Prefault(common) => {
            let l = load(&common)?;
            let bus = l.case.system.network.buses[0].id.clone();
            let fault = FaultSpec { bus, kind: FaultKind::None, z_ft: Complex64::default() };
            let t0 = Instant::now();
            let outcome = run_algorithm(&l.case.system, &fault, &l.scenario.options)?;
            let wall = t0.elapsed();
            let text = match common.format {
                Format::Table => render_outcome(&l.case.name, &l.case.system, &fault, &outcome, Some(wall)),
                Format::Records => render_records(&[ResultRecord::new(&l.case.name, &l.case.system, &fault, &outcome)]),
            };
            emit(&common, &text, out)?;
            Ok(if outcome.found() { EXIT_FOUND } else { EXIT_NO_EQUILIBRIUM })
        }
        Command::Sweep(run) => {
            let l = load(&run.common)?;
            let model = l.case.fault_ready(&l.scenario.options)?;
            let base = l.scenario.fault.as_ref();
            let buses: Vec<BusId> = match run.fault_bus.clone().map(BusId).or_else(|| base.map(|f| f.bus.clone())) {
                Some(id) => {
                    check_bus(&l.case, &id)?;
                    vec![id]
                }
                None => model.network.buses.iter().map(|b| b.id.clone()).collect(),
            };
            let kinds: Vec<FaultKind> = if run.fault_type.is_empty() {
                FaultKind::ALL_FAULTS.to_vec()
            } else {
                run.fault_type.iter().map(|k| (*k).into()).collect()
            };
            let impedances: Vec<Complex64> = if run.zft.is_empty() {
                vec![base.map(|f| f.z_ft).ok_or_else(missing_impedance)?]
            } else {
                run.zft.clone()
            };
            let mut faults = Vec::new();
            for bus in &buses {
                for kind in &kinds {
                    for z_ft in &impedances {
                        faults.push(FaultSpec { bus: bus.clone(), kind: *kind, z_ft: *z_ft });
                    }
                }
            }
            let t0 = Instant::now();
            let cases = sweep(&model, faults, &l.scenario.options, l.exec)?;
            let wall = t0.elapsed();
            let text = match run.common.format {
                Format::Table => {
                    let mut s = String::new();
                    for c in &cases {
                        s.push_str(&render_outcome(&l.case.name, &model, &c.fault, &c.outcome, None));
                        s.push('\n');
                    }
                    s.push_str(&format!("{} fault cases, t_comp = {:.3} s\n", cases.len(), wall.as_secs_f64()));
                    s
                }
                Format::Records => render_records(
                    &cases.iter().map(|c| ResultRecord::new(&l.case.name, &model, &c.fault, &c.outcome)).collect::<Vec<_>>(),
                ),
            };
            emit(&run.common, &text, out)?;
            Ok(if cases.iter().all(|c| c.outcome.found()) { EXIT_FOUND } else { EXIT_NO_EQUILIBRIUM })
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_FOUND };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
