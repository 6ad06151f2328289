//! `drivetrain` command-line tool.
//!
//! Exit codes: 0 on success, 1 when a computation fails, 2 for configuration
//! or I/O problems.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use drivetrain_core::cycle::{write_samples_csv, CycleComparison, CycleSummary, DriveCycle};
use drivetrain_core::report::{analyze, compare, cycle_runs, simulate};
use drivetrain_core::sim::SimOptions;
use drivetrain_core::topology::{TopologyKind, DEFAULT_VALIDATION_SPEED};
use drivetrain_core::{DrivetrainConfig, Error};

#[derive(Parser)]
#[command(
    name = "drivetrain",
    version,
    about = "Fuel-cell drivetrain loss and efficiency analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical losses at one fuel-cell power and motor speed.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long, value_enum, default_value_t = Topology::Both)]
        topology: Topology,
    },
    /// Run a drive cycle and write per-sample results and a summary.
    Cycle {
        #[command(flatten)]
        common: Common,
        /// Cycle CSV file, or one of the bundled cycles `hwfet`, `udds`.
        #[arg(long)]
        cycle: String,
        #[arg(long, value_enum, default_value_t = Topology::Both)]
        topology: Topology,
    },
    /// Switched-waveform simulation of one operating point.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long, value_enum)]
        topology: Single,
        /// Integration step (s); defaults to 1/200 of the fastest carrier period.
        #[arg(long)]
        dt: Option<f64>,
        /// Fundamental periods to measure after one settling period.
        #[arg(long, default_value_t = 4)]
        periods: usize,
        /// Voltage spread (V) treated as one level when counting levels.
        #[arg(long, default_value_t = 20.0)]
        level_tolerance: f64,
        /// Keep every n-th waveform sample in the CSV.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Both drivetrains on the bundled (or given) cycles plus the single-point ratio.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        /// Cycles to run; defaults to hwfet and udds.
        #[arg(long)]
        cycle: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for result files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Format of the report printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct Point {
    /// Fuel-cell output power (W).
    #[arg(long, default_value_t = 50e3)]
    fc_power: f64,
    /// Motor electrical speed (rad/s).
    #[arg(long, default_value_t = DEFAULT_VALIDATION_SPEED)]
    speed: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Topology {
    Dual,
    Conventional,
    Both,
}

impl Topology {
    fn kinds(self) -> Vec<TopologyKind> {
        match self {
            Topology::Dual => vec![TopologyKind::Dual],
            Topology::Conventional => vec![TopologyKind::Conventional],
            Topology::Both => vec![TopologyKind::Dual, TopologyKind::Conventional],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Single {
    Dual,
    Conventional,
}

impl From<Single> for TopologyKind {
    fn from(s: Single) -> Self {
        match s {
            Single::Dual => TopologyKind::Dual,
            Single::Conventional => TopologyKind::Conventional,
        }
    }
}

fn load_config(common: &Common) -> Result<DrivetrainConfig, Error> {
    match &common.config {
        Some(path) => Ok(DrivetrainConfig::from_path(path)?),
        None => Ok(DrivetrainConfig::default()),
    }
}

fn load_cycle(source: &str) -> Result<DriveCycle, Error> {
    let path = Path::new(source);
    if !path.exists() {
        if let Ok(c) = DriveCycle::builtin(source) {
            return Ok(c);
        }
    }
    Ok(DriveCycle::from_path(path)?)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: serde::Serialize>(out: impl Write, value: &T) -> Result<(), Error> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn summaries_csv(out: impl Write, summaries: &[CycleSummary]) -> Result<(), Error> {
    let mut out = out;
    writeln!(
        out,
        "cycle,topology,efficiency,output_j,loss_inverter_j,loss_motor_j,zero_energy,fc_constraints_passed"
    )?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.cycle,
            s.topology,
            s.efficiency,
            s.energies.output,
            s.energies.loss_inverter,
            s.energies.loss_motor,
            s.zero_energy,
            s.fc_constraints_passed
        )?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let stdout = io::stdout().lock();
    match cli.command {
        Command::Analyze {
            common,
            point,
            topology,
        } => {
            let config = load_config(&common)?;
            let report = analyze(&config, &topology.kinds(), point.fc_power, point.speed)?;
            if let Some(dir) = &common.out {
                write_json(create(dir, "analyze.json")?, &report)?;
                report.write_csv(create(dir, "analyze.csv")?)?;
            }
            match common.format {
                Format::Json => write_json(stdout, &report)?,
                Format::Csv => report.write_csv(stdout)?,
            }
        }
        Command::Cycle {
            common,
            cycle,
            topology,
        } => {
            let config = load_config(&common)?;
            let cycle = load_cycle(&cycle)?;
            let results = cycle_runs(&config, &cycle, &topology.kinds())?;
            let summaries: Vec<CycleSummary> = results.iter().map(|r| r.summary()).collect();
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for (r, s) in results.iter().zip(&summaries) {
                let stem = format!("{}_{}", cycle.name, r.topology);
                write_samples_csv(create(&dir, &format!("{stem}.csv"))?, r)?;
                write_json(create(&dir, &format!("{stem}.json"))?, s)?;
            }
            let comparison = (results.len() == 2).then(|| CycleComparison::new(&results[0], &results[1]));
            if let Some(c) = &comparison {
                write_json(create(&dir, &format!("{}_comparison.json", cycle.name))?, c)?;
            }
            match (common.format, &comparison) {
                (Format::Json, Some(c)) => write_json(stdout, c)?,
                (Format::Json, None) => write_json(stdout, &summaries[0])?,
                (Format::Csv, _) => summaries_csv(stdout, &summaries)?,
            }
        }
        Command::Simulate {
            common,
            point,
            topology,
            dt,
            periods,
            level_tolerance,
            stride,
        } => {
            let config = load_config(&common)?;
            let options = SimOptions {
                dt,
                periods,
                ..SimOptions::default()
            };
            let kind = TopologyKind::from(topology);
            let (report, waveforms) = simulate(&config, kind, point.fc_power, point.speed, &options, level_tolerance)?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            waveforms.write_csv(create(&dir, &format!("sim_{kind}_waveform.csv"))?, stride)?;
            write_json(create(&dir, &format!("sim_{kind}_report.json"))?, &report)?;
            match common.format {
                Format::Json => write_json(stdout, &report)?,
                Format::Csv => {
                    let mut out = stdout;
                    writeln!(out, "category,simulated_w,analytical_w,relative_deviation")?;
                    let c = &report.comparison;
                    for d in c.categories.iter().chain([&c.conduction, &c.switching, &c.total]) {
                        writeln!(
                            out,
                            "{},{},{},{}",
                            d.category, d.simulated, d.analytical, d.relative_deviation
                        )?;
                    }
                    writeln!(out, "voltage_levels,{},,", report.voltage_levels)?;
                    out.flush()?;
                }
            }
        }
        Command::Compare { common, point, cycle } => {
            let config = load_config(&common)?;
            let sources = if cycle.is_empty() {
                vec!["hwfet".to_string(), "udds".to_string()]
            } else {
                cycle
            };
            let cycles = sources.iter().map(|s| load_cycle(s)).collect::<Result<Vec<_>, _>>()?;
            let report = compare(&config, &cycles, point.fc_power, point.speed)?;
            if let Some(dir) = &common.out {
                write_json(create(dir, "compare.json")?, &report)?;
                report.write_csv(create(dir, "compare.csv")?)?;
            }
            match common.format {
                Format::Json => write_json(stdout, &report)?,
                Format::Csv => report.write_csv(stdout)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
