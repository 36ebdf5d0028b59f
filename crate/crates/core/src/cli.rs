//! Command-line front end: `run`, `sweep`, `analyze` and `check`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::coupling::{build_solvers, run, RunResult, Solvers};
use crate::error::{Error, Result};
use crate::model_io::{
    format_history, format_iteration_log, format_sci, parse_config, parse_history, parse_structural_model,
    CouplingConfig, SimulationMode, StructuralModel,
};
use crate::postproc::{
    flutter_boundary, least_damped_mode, modal_identification, modes_csv, sweep_table, transfer_function,
};

#[derive(Debug, Parser)]
#[command(name = "aerocouple", version, about = "Partitioned fluid-structure interaction driver")]
pub struct Cli {
    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation.
    Run(RunArgs),
    /// Vary one configuration key over a list of values.
    Sweep(SweepArgs),
    /// Analyse an existing history CSV.
    Analyze(AnalyzeArgs),
    /// Validate inputs and print a model summary without running.
    Check(CaseArgs),
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Configuration key to vary, e.g. UINF.
    #[arg(long)]
    pub key: String,
    /// Comma-separated values, ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub history: PathBuf,
    /// Column for modal identification, e.g. q_2.
    #[arg(long)]
    pub signal: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub modes: usize,
    /// Input and output columns of a transfer function.
    #[arg(long, requires_all = ["output", "frequency"])]
    pub input: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    /// Excitation frequency (Hz).
    #[arg(long)]
    pub frequency: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub transient_cut: f64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Reads, validates and pairs a configuration with its structural model.
pub fn load_case(config: &Path, model: &Path) -> Result<(CouplingConfig, StructuralModel)> {
    let cfg = parse_config(&read(config)?)?;
    for w in &cfg.warnings {
        log::warn!("{}: {w}", config.display());
    }
    let mdl = parse_structural_model(&read(model)?)?;
    Ok((cfg, mdl))
}

/// One-line result summary. Two-mode section models report plunge and
/// pitch; anything else lists the generalized coordinates.
pub fn summary_line(result: &RunResult) -> String {
    let Some(q) = result.final_q() else {
        return "no accepted state".into();
    };
    let iterations = result.iterations.len();
    let mut out = if q.len() == 2 {
        format!("h = {:.3} m, theta = {:.3e} rad", q[0], q[1])
    } else {
        q.iter()
            .enumerate()
            .map(|(i, v)| format!("q_{} = {}", i + 1, format_sci(*v)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = write!(out, " ({} records, {iterations} FSI iterations)", result.history.len());
    out
}

fn loads_csv(result: &RunResult) -> String {
    let mut out = String::from("time,lift,moment\n");
    for l in &result.section_loads {
        let _ = writeln!(out, "{},{},{}", format_sci(l[0]), format_sci(l[1]), format_sci(l[2]));
    }
    out
}

/// Writes every output of a run into `dir`.
pub fn write_outputs(dir: &Path, result: &RunResult, solvers: &Solvers) -> Result<()> {
    write(dir, "history.csv", &format_history(result.n_modes, &result.history)?)?;
    write(dir, "fsi_iterations.csv", &format_iteration_log(&result.iterations))?;
    write(dir, "fluid_solution.csv", &solvers.aero.write_solution())?;
    if let Some(state) = &result.final_state {
        write(dir, "structure_solution.csv", &solvers.structure.write_solution(state))?;
    }
    if !result.section_loads.is_empty() {
        write(dir, "loads.csv", &loads_csv(result))?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<String> {
    let (cfg, model) = load_case(&args.case.config, &args.case.model)?;
    let mut solvers = build_solvers(&cfg, &model)?;
    let result = run(&cfg, &mut solvers)?;
    solvers.aero.finalize();
    write_outputs(&args.out_dir, &result, &solvers)?;
    Ok(summary_line(&result))
}

/// Result of one sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    /// Least-damped identified mode over all generalized coordinates.
    pub damping: Option<f64>,
    pub frequency: Option<f64>,
    pub final_q: Vec<f64>,
}

fn sweep_one(cfg: &CouplingConfig, model: &StructuralModel, key: &str, value: f64) -> Result<SweepPoint> {
    let mut cfg = cfg.clone();
    cfg.set(key, &format!("{value:?}"))?;
    let mut solvers = build_solvers(&cfg, model)?;
    let result = run(&cfg, &mut solvers)?;
    let final_q = result.final_q().map(|q| q.iter().copied().collect()).unwrap_or_default();
    if cfg.mode != SimulationMode::UnsteadyCoupled {
        return Ok(SweepPoint {
            value,
            damping: None,
            frequency: None,
            final_q,
        });
    }
    let times = result.times();
    let mut least: Option<(f64, f64)> = None;
    for k in 0..result.n_modes {
        let series = result.q_series(k);
        match least_damped_mode(&times, &series, result.n_modes) {
            Ok(m) => {
                if least.is_none_or(|(d, _)| m.damping_ratio < d) {
                    least = Some((m.damping_ratio, m.frequency_hz));
                }
            }
            Err(e) => log::debug!("{key} = {value}: coordinate {} not identified: {e}", k + 1),
        }
    }
    let (damping, frequency) = least.ok_or_else(|| {
        Error::Analysis(format!("{key} = {value}: no mode identified in any generalized coordinate"))
    })?;
    Ok(SweepPoint {
        value,
        damping: Some(damping),
        frequency: Some(frequency),
        final_q,
    })
}

/// Worker count for sweeps: `AEROCOUPLE_THREADS`, else the available
/// parallelism.
pub fn sweep_threads() -> usize {
    std::env::var("AEROCOUPLE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs one simulation per value, at most `threads` at a time, and returns
/// the points in sweep order.
pub fn run_sweep(
    cfg: &CouplingConfig,
    model: &StructuralModel,
    key: &str,
    values: &[f64],
    threads: usize,
) -> Result<Vec<SweepPoint>> {
    let mut probe = cfg.clone();
    probe.set(key, "0")?;
    let mut points = Vec::with_capacity(values.len());
    for chunk in values.chunks(threads.max(1)) {
        let results: Vec<Result<SweepPoint>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&v| s.spawn(move || sweep_one(cfg, model, key, v)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Analysis("sweep worker panicked".into()))))
                .collect()
        });
        for r in results {
            points.push(r?);
        }
    }
    Ok(points)
}

fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let (cfg, model) = load_case(&args.case.config, &args.case.model)?;
    if args.values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config(None, "--values must be strictly ascending"));
    }
    let points = run_sweep(&cfg, &model, &args.key, &args.values, sweep_threads())?;
    let mut out = String::new();
    if cfg.mode != SimulationMode::UnsteadyCoupled {
        let _ = writeln!(out, "{:>14}  final generalized coordinates", args.key);
        for p in &points {
            let q: Vec<String> = p.final_q.iter().map(|v| format_sci(*v)).collect();
            let _ = writeln!(out, "{:>14}  {}", p.value, q.join(" "));
        }
        return Ok(out.trim_end().to_string());
    }
    let speeds: Vec<f64> = points.iter().map(|p| p.value).collect();
    let damping: Vec<f64> = points.iter().map(|p| p.damping.unwrap_or(f64::NAN)).collect();
    let freqs: Vec<Vec<f64>> = points.iter().map(|p| p.frequency.into_iter().collect()).collect();
    write(&args.out_dir, "sweep.dat", &sweep_table(&speeds, &damping, &freqs))?;
    let _ = writeln!(out, "{:>14} {:>14} {:>14}", args.key, "damping", "frequency_hz");
    for p in &points {
        let _ = writeln!(
            out,
            "{:>14} {:>14.6e} {:>14.6}",
            p.value,
            p.damping.unwrap_or(f64::NAN),
            p.frequency.unwrap_or(f64::NAN)
        );
    }
    match flutter_boundary(&speeds, &damping) {
        Ok(c) => {
            let _ = write!(out, "flutter boundary: {} = {:.6} (between {} and {})", args.key, c.speed, c.lower, c.upper);
        }
        Err(Error::NoFlutterCrossing(msg)) => {
            let _ = write!(out, "no flutter boundary: {msg}");
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn column(header: &[String], records: &[crate::model_io::HistoryRecord], name: &str) -> Result<Vec<f64>> {
    let n = records.first().map_or(0, |r| r.q.len());
    let idx = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidInput(format!("history has no column '{name}' (columns: {})", header.join(","))))?;
    Ok(records
        .iter()
        .map(|r| match idx {
            0 => r.time,
            i if i <= n => r.q[i - 1],
            i if i <= 2 * n => r.qd[i - n - 1],
            i => r.forces[i - 2 * n - 1],
        })
        .collect())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<String> {
    let (n, records) = parse_history(&read(&args.history)?)?;
    let header: Vec<String> = crate::model_io::history_header(n).split(',').map(str::to_string).collect();
    let times = column(&header, &records, "time")?;
    let mut out = String::new();
    let mut csv = String::new();
    if let (Some(input), Some(output), Some(f)) = (&args.input, &args.output, args.frequency) {
        let x = column(&header, &records, input)?;
        let y = column(&header, &records, output)?;
        let tf = transfer_function(&times, &x, &y, f, args.transient_cut)?;
        let _ = writeln!(
            out,
            "transfer {input} -> {output} at {f} Hz: magnitude {:.6e}, phase {:.4} deg over {} periods{}",
            tf.magnitude,
            tf.phase_deg,
            tf.periods,
            if tf.ill_conditioned { " (ill conditioned)" } else { "" }
        );
        let _ = writeln!(csv, "frequency_hz,magnitude,phase_deg,ill_conditioned\n{f:?},{:?},{:?},{}", tf.magnitude, tf.phase_deg, tf.ill_conditioned);
    }
    if let Some(signal) = &args.signal {
        let y = column(&header, &records, signal)?;
        let modes = modal_identification(&times, &y, args.modes)?;
        if modes.is_empty() {
            let _ = writeln!(out, "{signal}: no oscillatory content");
        }
        for m in &modes {
            let _ = writeln!(out, "{signal}: {:.6} Hz, damping ratio {:.6e}", m.frequency_hz, m.damping_ratio);
        }
        csv.push_str(&modes_csv(&modes));
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("analyze needs --signal or --input/--output/--frequency".into()));
    }
    if let Some(dir) = &args.out_dir {
        write(dir, "analysis.csv", &csv)?;
    }
    Ok(out.trim_end().to_string())
}

fn cmd_check(args: &CaseArgs) -> Result<String> {
    let (cfg, model) = load_case(&args.config, &args.model)?;
    let solvers = build_solvers(&cfg, &model)?;
    let map = solvers.transfer.displacement_map();
    Ok(format!(
        "{}: {} modes, {} structural nodes, {} fluid points ({}), RBF radius {:.4}, map condition estimate {:.3e}",
        cfg.mode.keyword(),
        model.n_modes(),
        model.n_nodes(),
        solvers.aero.positions().len(),
        solvers.aero.name(),
        map.radius(),
        map.condition_estimate()
    ))
}

/// Executes a parsed command and returns its report.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Check(a) => cmd_check(a),
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("AEROCOUPLE_LOG")
        .try_init();
    match execute(&cli) {
        Ok(report) => {
            if !cli.quiet || matches!(cli.command, Command::Run(_)) {
                println!("{report}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
