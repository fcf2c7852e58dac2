use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qbounce_cli::config::{load_config, Scenario};
use qbounce_cli::error::{CliError, CliResult};

/// Bound states of ultracold neutrons above a mirror and the neutron
/// count through a slit capped by an absorbing ceiling.
#[derive(Parser)]
#[command(name = "qbounce", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration's lowest levels and write the table
    Spectrum(RunArgs),
    /// Predict counts over a slit-width scan, with an SVG plot
    Scan(RunArgs),
    /// Fit level populations or the threshold curve to measured counts
    Fit(RunArgs),
    /// Print the reference calibration chain and simulated areas
    Appendix(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,

    /// Measured counts CSV with header `z_um,n_out[,sigma]`
    #[arg(long)]
    data: Option<PathBuf>,

    /// Output directory for CSV and SVG artifacts
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(scenario: Scenario, args: RunArgs) -> CliResult<()> {
    let text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read {}: {e}", path.display()))
        })?),
        None => None,
    };
    let config = load_config(scenario, text.as_deref(), args.data, args.out)?;
    qbounce_cli::scenarios::run(&config)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Spectrum(a) => (Scenario::Spectrum, a),
        Command::Scan(a) => (Scenario::Scan, a),
        Command::Fit(a) => (Scenario::Fit, a),
        Command::Appendix(a) => (Scenario::Appendix, a),
    };
    match execute(scenario, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.machine_line());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
