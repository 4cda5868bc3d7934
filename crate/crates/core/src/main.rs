use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ratelab::harness::{
    emit_results, emit_separation, emit_spectrum, run_selftest, run_separation, run_spectrum, run_suite, ConfigFile,
    OutputFormat,
};
use ratelab::Error;

#[derive(Parser)]
#[command(name = "ratelab", version, about = "Local convergence-rate experiments for GD, momentum, RMSprop and Adam")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every [[experiment]] in a config file
    Run(RunArgs),
    /// Run the [separation] entry: Adam versus GD at a shared step bound
    Separation(RunArgs),
    /// Dump the momentum block-matrix spectrum for the [spectrum] entry
    Spectrum(RunArgs),
    /// Run the built-in invariant suites
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed override for ball-sampled initial points
    #[arg(long)]
    seed: Option<u64>,
    /// Step budget override
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
    Plotdata,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Table => OutputFormat::Table,
            Format::Plotdata => OutputFormat::Plotdata,
        }
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> ratelab::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load(args: &RunArgs) -> ratelab::Result<ConfigFile> {
    let mut cfg = ConfigFile::load(&args.config)?;
    cfg.apply_overrides(args.seed, args.budget);
    Ok(cfg)
}

/// Returns whether every outcome was as predicted.
fn dispatch(command: Command) -> ratelab::Result<bool> {
    match command {
        Command::Run(args) => {
            let plans = load(&args)?.plans()?;
            let results = run_suite(&plans)?;
            write_output(&args.out, &emit_results(&results, args.format.into())?)?;
            Ok(results.iter().all(|r| r.verdict().is_acceptable()))
        }
        Command::Separation(args) => {
            let cfg = load(&args)?;
            let spec = cfg
                .separation
                .ok_or_else(|| Error::Usage("config has no [separation] table".into()))?;
            let report = run_separation(&spec)?;
            write_output(&args.out, &emit_separation(&report, args.format.into()))?;
            Ok(report.signs_as_predicted())
        }
        Command::Spectrum(args) => {
            let cfg = load(&args)?;
            let spec = cfg
                .spectrum
                .ok_or_else(|| Error::Usage("config has no [spectrum] table".into()))?;
            let (report, alpha, gamma) = run_spectrum(&spec)?;
            write_output(&args.out, &emit_spectrum(&report, alpha, gamma, args.format.into()))?;
            Ok(true)
        }
        Command::Selftest => {
            let suites = run_selftest()?;
            for s in &suites {
                println!("{s}");
            }
            Ok(suites.iter().all(|s| s.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Divergence(_) | Error::Computation(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
