mod commands;
mod config;
mod error;
mod output;
mod selfcheck;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use config::{Command, ExperimentConfig};
use error::CliError;

/// Batch runner for band-limited nodal-length experiments.
#[derive(Debug, Parser)]
#[command(name = "bandnodal", version)]
struct Args {
    /// kernel-curve, kacrice-curve, variance, mc-nodal, chaos2 or selfcheck
    command: Command,
    /// Configuration file (optional for selfcheck)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; overrides `out_path`. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let text = match &args.config {
        Some(p) => fs::read_to_string(p).map_err(CliError::io(&p.to_string_lossy()))?,
        None if args.command == Command::Selfcheck => String::new(),
        None => return Err(CliError::Config { line: None, msg: "--config is required".into() }),
    };
    ExperimentConfig::parse(&text, args.command)
}

fn execute(args: &Args) -> Result<(), CliError> {
    let cfg = load(args)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config { line: None, msg: format!("threads: {e}") })?;

    if cfg.command == Command::Selfcheck {
        return match selfcheck::run() {
            0 => Ok(()),
            k => Err(CliError::Invariant(k)),
        };
    }

    let start = Instant::now();
    let rows = commands::run(&cfg)?;
    let out = args.out.clone().or_else(|| cfg.out_path.as_ref().map(PathBuf::from));
    match out {
        Some(path) => {
            let name = path.to_string_lossy().into_owned();
            let mut w = BufWriter::new(File::create(&path).map_err(CliError::io(&name))?);
            output::write_rows(&mut w, &rows, cfg.format)?;
            w.flush().map_err(CliError::io(&name))?;
        }
        None => output::write_rows(io::stdout().lock(), &rows, cfg.format)?,
    }
    eprintln!("{}: {} rows in {:.3}s", cfg.command, rows.len(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
