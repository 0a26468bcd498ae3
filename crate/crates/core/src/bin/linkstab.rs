//! Command-line runner for the link-stability sweeps.
//!
//! Exit codes: 0 success, 1 usage/config/IO error, 2 validation failure
//! (some `|z| > 3`), 3 numerical non-convergence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use linkstab::experiment::{run_sweep, validate, ExperimentConfig, SweepKind, Table};
use linkstab::plot::render_svg;
use linkstab::Error;

#[derive(Parser)]
#[command(
    name = "linkstab",
    version,
    about = "Link stability of OU-mobile node pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Mutual-information ratio versus the sampling interval.
    SweepMi(RunArgs),
    /// Entropy rate versus the sampling interval.
    SweepEntropyDt(RunArgs),
    /// Entropy rate versus sqrt(D).
    SweepEntropyD(RunArgs),
    /// Entropy rate versus the relaxation time.
    SweepEntropyTau(RunArgs),
    /// Analytical values against the simulation oracle.
    Validate(RunArgs),
    /// Render a sweep CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (default: config output path, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Adds simulation columns to sweeps.
    #[arg(long)]
    mc: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV to plot.
    csv: PathBuf,
    /// Output SVG (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Outcome {
    Done,
    ValidationFailed(usize),
}

fn write_output(path: Option<&Path>, body: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(body)?;
            w.flush()?;
        }
        None => std::io::stdout().lock().write_all(body)?,
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, Option<PathBuf>), Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        let mut mc = cfg.mc.clone().unwrap_or_default();
        mc.seed = seed;
        cfg.mc = Some(mc);
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
    Ok((cfg, out))
}

fn emit(table: &Table, out: Option<&Path>) -> Result<(), Error> {
    write_output(out, table.to_csv_string().as_bytes())
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    let kind = match &cli.command {
        Command::SweepMi(_) => Some(SweepKind::MutualInfo),
        Command::SweepEntropyDt(_) => Some(SweepKind::EntropyDt),
        Command::SweepEntropyD(_) => Some(SweepKind::EntropyD),
        Command::SweepEntropyTau(_) => Some(SweepKind::EntropyTau),
        _ => None,
    };
    match cli.command {
        Command::SweepMi(args)
        | Command::SweepEntropyDt(args)
        | Command::SweepEntropyD(args)
        | Command::SweepEntropyTau(args) => {
            let (cfg, out) = load(&args)?;
            let result = run_sweep(kind.expect("sweep command"), &cfg, args.mc)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            emit(&result.table, out.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Validate(args) => {
            let (cfg, out) = load(&args)?;
            let report = validate(&cfg)?;
            emit(&report.table, out.as_deref())?;
            if report.failures > 0 {
                Ok(Outcome::ValidationFailed(report.failures))
            } else {
                Ok(Outcome::Done)
            }
        }
        Command::Plot(args) => {
            let csv = std::fs::read_to_string(&args.csv)?;
            let svg = render_svg(&csv)?;
            write_output(args.out.as_deref(), svg.as_bytes())?;
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
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
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed(n)) => {
            eprintln!("validation failed: {n} comparison(s) with |z| > 3");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
