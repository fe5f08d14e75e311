//! Command-line surface.
//!
//! Exit status: 0 success, 2 configuration/usage error, 3 numeric divergence,
//! 4 calibration coverage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::connectivity::{generate_connectivity, ConnectivitySpec, DEFAULT_WEIGHT};
use crate::engine::{simulate_into, Backend, Precision, RecordSpec, Simulation, SimulationConfig};
use crate::error::{Error, Result};
use crate::io::{meta_path, write_atomic, write_meta, AtomicWriter, CsvTraceWriter};
use crate::model::{EvokedInputSchedule, Pulse, UseCase, DEFAULT_DT_MS};
use crate::planner::{plan, TdpTable};
use crate::profiler::{estimate_dfe_ticks, DfeTickModel, WorkloadProfile};
use crate::selector::{classify, rt_max_network, select, Calibration, CalibrationPoint, ExperimentSpec, Fabric};

/// Overrides the worker count of `simulate` and `calibrate`.
pub const WORKERS_ENV: &str = "BRAINFRAME_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "brainframe", version, about = "Gap-junction network simulator and accelerator planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a network simulation and write its axon-voltage trace as CSV.
    Simulate(SimulateArgs),
    /// Print the analytic per-step workload of an experiment as JSON.
    Profile(ProfileArgs),
    /// Choose an accelerator fabric for an experiment.
    Select(SelectArgs),
    /// Plan a batch of experiments across fabrics.
    Plan(PlanArgs),
    /// Measure seconds per step on this host and write a calibration CSV.
    Calibrate(CalibrateArgs),
    /// Write a connectivity matrix CSV.
    GenConnectivity(GenConnectivityArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// rgj, sgj or ngj.
    #[arg(long = "case", value_parser = parse_use_case)]
    use_case: UseCase,
    #[arg(long)]
    n: usize,
    /// Connectivity density in [0, 1]; ignored for ngj.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON configuration; replaces the experiment flags below.
    #[arg(long, conflicts_with_all = ["use_case", "n", "steps"])]
    config: Option<PathBuf>,
    #[arg(long = "case", value_parser = parse_use_case, required_unless_present = "config")]
    use_case: Option<UseCase>,
    #[arg(long, required_unless_present = "config")]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, required_unless_present = "config")]
    steps: Option<u64>,
    /// start_step:end_step:amplitude (µA/cm²), all neurons. Repeatable.
    #[arg(long = "pulse")]
    pulses: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_WEIGHT)]
    weight: f64,
    /// Connectivity matrix CSV instead of a generated one.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run on the partitioned backend with this many workers.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 1)]
    stride: u64,
    /// Comma-separated neuron indices to record (default: all).
    #[arg(long, value_delimiter = ',')]
    record: Option<Vec<usize>>,
    #[arg(long, default_value = "f64", value_parser = parse_precision)]
    precision: Precision,
    /// Step size in ms.
    #[arg(long, default_value_t = DEFAULT_DT_MS)]
    dt: f64,
    #[arg(long, short, default_value = "trace.csv")]
    out: PathBuf,
    /// Also write `<out>.meta.json` (config digest and step timing).
    #[arg(long)]
    meta: bool,
    /// Write the resolved configuration as JSON.
    #[arg(long)]
    emit_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, default_value_t = DfeTickModel::default().unroll_factor)]
    unroll: u64,
    #[arg(long, default_value_t = DfeTickModel::default().pipeline_depth)]
    pipeline_depth: u64,
    #[arg(long, default_value_t = DfeTickModel::default().clock_hz)]
    clock_hz: f64,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long)]
    real_time: bool,
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Print the largest real-time network per fabric instead of a decision.
    #[arg(long)]
    rt_max: bool,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// JSON list of experiment specs.
    #[arg(long)]
    batch: PathBuf,
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Use the rule table for experiments the calibration does not cover.
    #[arg(long)]
    fallback: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write the plain-text table (minutes) here.
    #[arg(long)]
    text_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Fabric label for the measured rows.
    #[arg(long, default_value = "phi", value_parser = parse_fabric)]
    fabric: Fabric,
    #[arg(long, value_delimiter = ',', default_value = "rgj,sgj,ngj", value_parser = parse_use_case)]
    cases: Vec<UseCase>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
    densities: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "96,192,384")]
    sizes: Vec<usize>,
    /// Steps simulated per grid point.
    #[arg(long, default_value_t = 200)]
    steps: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also add DFE rows predicted by the analytic tick model.
    #[arg(long)]
    dfe_model: bool,
    #[arg(long, short, default_value = "calibration.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenConnectivityArgs {
    #[arg(long)]
    n: usize,
    /// Connection probability; 1.0 gives all-to-all.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_WEIGHT)]
    weight: f64,
    #[arg(long, short)]
    out: PathBuf,
}

fn parse_use_case(s: &str) -> std::result::Result<UseCase, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_fabric(s: &str) -> std::result::Result<Fabric, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_precision(s: &str) -> std::result::Result<Precision, String> {
    match s {
        "f64" => Ok(Precision::F64),
        "f32" => Ok(Precision::F32),
        other => Err(format!("unknown precision {other:?} (expected f64 or f32)")),
    }
}

fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .ok()
            .filter(|&w| w >= 1)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        _ => Ok(None),
    }
}

fn backend_for(workers: Option<usize>) -> Result<Backend> {
    Ok(match env_workers()?.or(workers) {
        Some(workers) => Backend::Parallel { workers },
        None => Backend::Sequential,
    })
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Builds the simulation config a `simulate` invocation describes.
fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => {
            let use_case = args.use_case.expect("required by clap");
            let mut c = SimulationConfig::new(use_case, args.n.expect("required by clap"), args.steps.expect("required by clap"));
            c.connectivity = match (&args.matrix, use_case) {
                (_, UseCase::Ngj) => None,
                (Some(path), _) => Some(ConnectivitySpec::FromFile { path: path.clone() }),
                (None, _) => Some(ConnectivitySpec::for_density(args.density, args.seed, args.weight)),
            };
            c.inputs = EvokedInputSchedule::new(args.pulses.iter().map(|p| p.parse()).collect::<Result<Vec<Pulse>>>()?);
            c.record = RecordSpec {
                stride: args.stride,
                neurons: args.record.clone(),
            };
            c.seed = args.seed;
            c.precision = args.precision;
            c.dt = args.dt;
            c.backend = backend_for(args.workers)?;
            c
        }
    };
    if let Some(workers) = env_workers()? {
        config.backend = Backend::Parallel { workers };
    }
    config.validate()?;
    Ok(config)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = simulation_config(&args)?;
    if let Some(path) = &args.emit_config {
        write_atomic(path, serde_json::to_string_pretty(&config)?.as_bytes())?;
    }
    let mut sink = CsvTraceWriter::new(AtomicWriter::create(&args.out)?)?;
    let meta = simulate_into(&config, None, &mut sink)?;
    sink.into_inner().commit()?;
    if args.meta {
        write_meta(&meta_path(&args.out), &meta)?;
    }
    eprintln!(
        "{} steps x {} cells ({}), mean {:.3e} s/step -> {}",
        config.duration_steps,
        config.n,
        config.use_case,
        meta.timing.mean_s,
        args.out.display()
    );
    Ok(())
}

fn cmd_profile(args: ProfileArgs) -> Result<()> {
    let ExperimentArgs { use_case, n, density } = args.experiment;
    let profile = WorkloadProfile::new(use_case, n, density)?;
    let model = DfeTickModel {
        unroll_factor: args.unroll,
        pipeline_depth: args.pipeline_depth,
        clock_hz: args.clock_hz,
    };
    let ticks = estimate_dfe_ticks(use_case, n, density, &model)?;
    let mut value = serde_json::to_value(&profile)?;
    value["dfe"] = serde_json::json!({
        "model": model,
        "ticks_per_step": ticks,
        "seconds_per_step": model.seconds(ticks),
    });
    print_json(&value)
}

fn load_calibration(path: &Option<PathBuf>) -> Result<Option<Calibration>> {
    path.as_deref().map(Calibration::load).transpose()
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let ExperimentArgs { use_case, n, density } = args.experiment;
    let calibration = load_calibration(&args.calibration)?;
    if args.rt_max {
        let table: serde_json::Map<String, serde_json::Value> = Fabric::ALL
            .iter()
            .map(|&f| (f.to_string(), rt_max_network(f, use_case, density, calibration.as_ref()).into()))
            .collect();
        return print_json(&table);
    }
    let mut spec = ExperimentSpec::new(use_case, n, density);
    spec.real_time = args.real_time;
    let class = classify(&spec)?;
    print_json(&select(&class, calibration.as_ref()))
}

fn cmd_plan(args: PlanArgs) -> Result<()> {
    let batch: Vec<ExperimentSpec> = serde_json::from_str(&std::fs::read_to_string(&args.batch)?)?;
    let calibration = load_calibration(&args.calibration)?;
    let report = plan(&batch, calibration.as_ref(), args.fallback, &TdpTable::default())?;
    match &args.out {
        Some(path) => write_atomic(path, serde_json::to_string_pretty(&report)?.as_bytes())?,
        None => print_json(&report)?,
    }
    let text = report.to_text();
    match &args.text_out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => eprint!("{text}"),
    }
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let backend = backend_for(args.workers)?;
    let mut points = Vec::new();
    for &use_case in &args.cases {
        let densities: &[f64] = if use_case == UseCase::Ngj { &[0.0] } else { &args.densities };
        for &density in densities {
            for &n in &args.sizes {
                let mut config = SimulationConfig::new(use_case, n, args.steps);
                config.backend = backend;
                config.seed = args.seed;
                config.record = RecordSpec {
                    stride: 1,
                    neurons: Some(Vec::new()),
                };
                if use_case != UseCase::Ngj {
                    config.connectivity = Some(ConnectivitySpec::for_density(density, args.seed, DEFAULT_WEIGHT));
                }
                let mut sim = Simulation::<f64>::new(config)?;
                sim.run_into(&mut Vec::new())?;
                points.push(CalibrationPoint {
                    fabric: args.fabric,
                    use_case,
                    density,
                    n,
                    sec_per_step: sim.timing().mean_s.max(f64::MIN_POSITIVE),
                });
                if args.dfe_model && args.fabric != Fabric::Dfe {
                    let model = DfeTickModel::default();
                    points.push(CalibrationPoint {
                        fabric: Fabric::Dfe,
                        use_case,
                        density,
                        n,
                        sec_per_step: model.seconds(estimate_dfe_ticks(use_case, n, density, &model)?),
                    });
                }
            }
        }
    }
    let cal = Calibration::from_points(points)?;
    cal.save(&args.out)?;
    eprintln!("{} calibration rows -> {}", cal.points().len(), args.out.display());
    Ok(())
}

fn cmd_gen_connectivity(args: GenConnectivityArgs) -> Result<()> {
    let spec = ConnectivitySpec::for_density(args.density, args.seed, args.weight);
    let m = generate_connectivity(&spec, args.n)?;
    m.save(&args.out)?;
    eprintln!("{0}x{0} matrix, density {1:.4} -> {2}", m.n(), m.density(), args.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Select(a) => cmd_select(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::GenConnectivity(a) => cmd_gen_connectivity(a),
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
