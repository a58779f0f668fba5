//! The `qfrenet` command line: `run`, `validate` and `sweep`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::error::Error;
use crate::plot::{bloch_orbit, line_chart, Series};
use crate::scenario::{run_scenario, OutputKind, RunRecord, Sample, Scenario, ScenarioConfig};
use crate::validate::{run_suite, DEFAULT_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exact header of `trajectory.csv`.
pub const CSV_HEADER: [&str; 12] = [
    "t",
    "s",
    "v",
    "v_dot",
    "ax",
    "ay",
    "az",
    "kappa2_bloch",
    "kappa2_expect",
    "kappa2_projector",
    "tau2_expect",
    "tau2_residual",
];

#[derive(Debug, Parser)]
#[command(
    name = "qfrenet",
    version,
    about = "Curvature and torsion of driven quantum evolutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trajectory, plots and diagnostics.
    Run {
        config: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Check the library invariants on seeded random draws.
    Validate {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    BadInput(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::BadInput(_) => EXIT_BAD_INPUT,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::BadInput(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::InvalidGrid(_)
            | Error::DimensionMismatch { .. }
            | Error::DimensionTooSmall(_)
            | Error::DimensionUnsupported { .. }
            | Error::ZeroNorm
            | Error::NotHermitian(_)
            | Error::NonUnitVector(_) => Failure::BadInput(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Validate { seed } => return cmd_validate(seed),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => cmd_sweep(&config, &param, &values, &out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn read_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(ScenarioConfig::from_json(&text)?)
}

fn cmd_run(config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = read_config(config)?;
    let record = run_scenario(&Scenario::build(cfg)?)?;
    write_run(&record, out)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// Writes the trajectory table with 17 significant digits and `\n` line
/// endings; undefined values are empty fields.
pub fn write_csv<W: Write>(record: &RunRecord, w: W) -> csv::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for s in &record.samples {
        let a = s.bloch;
        wtr.write_record([
            cell(Some(s.t)),
            cell(Some(s.s)),
            cell(Some(s.v)),
            cell(s.v_dot),
            cell(a.map(|a| a.x)),
            cell(a.map(|a| a.y)),
            cell(a.map(|a| a.z)),
            cell(s.kappa2_bloch),
            cell(s.kappa2_expect),
            cell(s.kappa2_projector),
            cell(s.tau2_expect),
            cell(s.tau2_residual),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One per-sample quantity of a chart.
type Column = fn(&Sample) -> Option<f64>;

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

/// Writes `trajectory.csv` (first, so a plotting problem cannot take it
/// down), then the SVG plots and `run.json`.
fn write_run(record: &RunRecord, out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let outputs = &record.config.outputs;
    if outputs.contains(&OutputKind::Csv) {
        let path = out.join("trajectory.csv");
        let file = fs::File::create(&path).map_err(|e| io_failure(&path, e))?;
        write_csv(record, std::io::BufWriter::new(file)).map_err(|e| io_failure(&path, e))?;
    }
    if outputs.contains(&OutputKind::Svg) {
        let series = |label, f: Column| Series {
            label,
            points: record.samples.iter().map(|s| (s.t, f(s))).collect(),
        };
        let routes: [(&str, Column); 3] = [
            ("kappa2 bloch", |s| s.kappa2_bloch),
            ("kappa2 expectation", |s| s.kappa2_expect),
            ("kappa2 projector", |s| s.kappa2_projector),
        ];
        let kappa: Vec<Series> = routes
            .into_iter()
            .filter(|(_, f)| record.samples.iter().any(|s| f(s).is_some()))
            .map(|(label, f)| series(label, f))
            .collect();
        write_file(
            &out.join("kappa.svg"),
            &line_chart("curvature coefficient", "t", &kappa),
        )?;
        let speed = [series("v", |s| Some(s.v))];
        write_file(&out.join("speed.svg"), &line_chart("speed", "t", &speed))?;
        let orbit: Vec<_> = record.samples.iter().filter_map(|s| s.bloch).collect();
        if !orbit.is_empty() {
            write_file(&out.join("orbit.svg"), &bloch_orbit("Bloch vector orbit", &orbit))?;
        }
    }
    let summary = serde_json::json!({
        "config": record.config,
        "samples": record.samples.len(),
        "diagnostics": record.diagnostics,
        "regimes": record.regimes,
    });
    let text = serde_json::to_string_pretty(&summary).expect("run summary serializes");
    write_file(&out.join("run.json"), &(text + "\n"))
}

fn cmd_validate(seed: u64) -> i32 {
    let outcomes = run_suite(seed);
    println!("{:<46} {:>12} {:>10}  result", "check", "measured", "tolerance");
    for o in &outcomes {
        println!(
            "{:<46} {:>12.3e} {:>10.1e}  {}",
            o.name,
            o.measured,
            o.tolerance,
            if o.passed { "PASS" } else { "FAIL" }
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} checks, {} failed (seed {seed})", outcomes.len(), failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}

fn parse_values(values: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if parts.is_empty() {
        return Err(Failure::BadInput("--values: at least one value is required".into()));
    }
    parts
        .iter()
        .map(|p| match p.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(Failure::BadInput(format!("--values: '{p}' is not a finite number"))),
        })
        .collect()
}

fn cmd_sweep(config: &Path, param: &str, values: &str, out: &Path) -> Result<(), Failure> {
    let values = parse_values(values)?;
    let base = read_config(config)?;
    if !base.params.contains_key(param) {
        return Err(Failure::BadInput(format!(
            "--param: '{param}' is not a parameter of this scenario"
        )));
    }
    let configs = values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            cfg.params.insert(param.to_string(), v);
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let records: Vec<Result<RunRecord, Error>> = configs
        .into_par_iter()
        .map(|cfg| run_scenario(&Scenario::build(cfg)?))
        .collect();

    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let mut summary = String::from("value,max_kappa2,mean_v,regimes,run_dir\n");
    for (k, (value, record)) in values.iter().zip(records).enumerate() {
        let record = record?;
        let dir = format!("run_{k:03}");
        write_run(&record, &out.join(&dir))?;
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            cell(Some(*value)),
            cell(record.max_kappa2()),
            cell(Some(record.mean_speed())),
            record.regimes.join(";"),
            dir
        ));
    }
    write_file(&out.join("summary.csv"), &summary)
}
