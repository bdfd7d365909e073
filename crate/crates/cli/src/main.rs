use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cqed_core::params::file::ConfigFile;
use cqed_core::sweep::{self, BranchSelect, Format, GridSpec, SweepResult, Task};

#[derive(Parser)]
#[command(
    name = "cqed",
    version,
    about = "Steady-state maps for a driven cavity coupled to a flux qubit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// |S21|² over flux / pump frequency / pump power.
    TransmissionMap(Common),
    /// Signal and idler gains for a weak probe offset from the pump.
    Imd(Common),
    /// Dressed levels and linear resonances.
    Spectrum(Common),
    /// Weak-nonlinear coefficients and bistability onset.
    Bistability(Common),
    /// Transmission near an n-th order superharmonic resonance.
    ShrMap(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Ground,
    Excited,
    Combined,
}

#[derive(Args)]
struct Common {
    /// Device description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Grid description (JSON). The task field is set by the subcommand.
    #[arg(long)]
    grid: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    /// 0 uses every core.
    #[arg(long, env = "CQED_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long, allow_negative_numbers = true)]
    power_dbm: Option<f64>,
    #[arg(long)]
    shr_order: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    signal_offset_khz: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega_f_ghz: Option<f64>,
    #[arg(long)]
    n_max: Option<u32>,
}

enum Failure {
    Config(String),
    Io(String),
}

fn load(task: Task, args: &Common) -> Result<(cqed_core::PhysicalConfig, GridSpec), Failure> {
    let read = |path: &PathBuf| {
        std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    };
    let config = ConfigFile::from_json(&read(&args.config)?)
        .and_then(|f| f.to_config())
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;

    let mut value: serde_json::Value = serde_json::from_str(&read(&args.grid)?)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.grid.display())))?;
    if let Some(obj) = value.as_object_mut() {
        obj.insert(
            "task".into(),
            serde_json::to_value(task).expect("task serializes"),
        );
    }
    let mut spec: GridSpec = serde_json::from_value(value)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.grid.display())))?;
    if let Some(b) = args.branch {
        spec.branch = match b {
            BranchArg::Ground => BranchSelect::Ground,
            BranchArg::Excited => BranchSelect::Excited,
            BranchArg::Combined => BranchSelect::Combined,
        };
    }
    spec.power_dbm = args.power_dbm.or(spec.power_dbm);
    spec.shr_order = args.shr_order.or(spec.shr_order);
    spec.signal_offset_khz = args.signal_offset_khz.or(spec.signal_offset_khz);
    spec.omega_f_ghz = args.omega_f_ghz.or(spec.omega_f_ghz);
    spec.n_max = args.n_max.or(spec.n_max);
    spec.validate()
        .map_err(|e| Failure::Config(format!("{}: {e}", args.grid.display())))?;
    Ok((config, spec))
}

fn write(result: &SweepResult, args: &Common) -> Result<(), Failure> {
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match &args.out {
        Some(path) => sweep::emit_to_path(result, format, path).map_err(|e| Failure::Io(e.to_string())),
        None => sweep::emit(result, format, &mut std::io::stdout().lock())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn run(task: Task, args: &Common) -> Result<ExitCode, Failure> {
    let (config, spec) = load(task, args)?;
    let result =
        sweep::run_sweep(&spec, &config, args.workers).map_err(|e| Failure::Config(e.to_string()))?;
    write(&result, args)?;
    for w in &result.warnings {
        eprintln!("warning: cell {}: {}", w.cell, w.message);
    }
    for d in &result.diagnostics {
        let branch = d.branch.as_deref().map(|b| format!(" ({b})")).unwrap_or_default();
        eprintln!("diagnostic: cell {}{branch}: {}", d.cell, d.message);
    }
    Ok(if result.diagnostics.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match &cli.command {
        Command::TransmissionMap(a) => (Task::TransmissionMap, a),
        Command::Imd(a) => (Task::Imd, a),
        Command::Spectrum(a) => (Task::Spectrum, a),
        Command::Bistability(a) => (Task::Bistability, a),
        Command::ShrMap(a) => (Task::ShrMap, a),
    };
    match run(task, args) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
