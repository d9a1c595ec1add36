use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] weylcheck::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "weylcheck", version, about = "Limit-point/limit-circle classification and self-adjoint extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify both endpoints of a problem and compose deficiency indices.
    Classify {
        /// Problem JSON file; stdin when omitted or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Numeric configuration overrides (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        output: OutputFormat,
    },
    /// Boundary condition and adjoint ratios for the half-line extension with phase c.
    Extensions {
        #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep", allow_hyphen_values = true)]
        c: Option<f64>,
        /// `start:end:count`, endpoints included.
        #[arg(long)]
        sweep: Option<String>,
        /// Defaults to json for a single c and csv for a sweep.
        #[arg(long, value_enum)]
        output: Option<OutputFormat>,
    },
    /// Tabulate the demonstration sequences f_n or g_n.
    RegularityDemo {
        #[arg(long, value_parser = ["f", "g"])]
        which: String,
        #[arg(long)]
        n_max: u32,
        #[arg(long)]
        a: f64,
    },
    /// Tabulate V and the radial effective potential.
    EffectivePotential {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        l: u32,
        /// Potential as JSON, e.g. '{"type":"coulomb","z":-1}'.
        #[arg(long)]
        potential: String,
        /// `start:end:count`
        #[arg(long)]
        grid: String,
    },
}

fn read_input(path: Option<&PathBuf>) -> Result<String, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(fs::read_to_string(p)?),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn run(cli: Cli) -> Result<(Vec<u8>, ExitCode), CliError> {
    let mut out = Vec::new();
    let code = match cli.command {
        Command::Classify { input, config, output } => {
            let spec = read_input(input.as_ref())?;
            let config = config.map(fs::read_to_string).transpose()?;
            commands::classify(&spec, config.as_deref(), output, &mut out)?
        }
        Command::Extensions { c, sweep, output } => {
            match (c, sweep) {
                (Some(c), _) => commands::extensions_single(c, output.unwrap_or(OutputFormat::Json), &mut out)?,
                (None, Some(s)) => commands::extensions_sweep(&s, output.unwrap_or(OutputFormat::Csv), &mut out)?,
                (None, None) => return Err(CliError::Usage("give --c or --sweep".into())),
            }
            ExitCode::SUCCESS
        }
        Command::RegularityDemo { which, n_max, a } => {
            commands::regularity_demo(&which, n_max, a, &mut out)?;
            ExitCode::SUCCESS
        }
        Command::EffectivePotential { n, l, potential, grid } => {
            commands::effective_potential(n, l, &potential, &grid, &mut out)?;
            ExitCode::SUCCESS
        }
    };
    Ok((out, code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, code)) => {
            if let Err(e) = io::stdout().lock().write_all(&out) {
                eprintln!("weylcheck: {e}");
                return ExitCode::FAILURE;
            }
            code
        }
        Err(e) => {
            eprintln!("weylcheck: {e}");
            ExitCode::FAILURE
        }
    }
}
