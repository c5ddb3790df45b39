use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jcas_sim::config::{parse_config, serialize, ConfigError, ConfigErrors, ExperimentConfig};
use jcas_sim::output::{summary, write_outputs};
use jcas_sim::{run_campaign, RunError};

/// Massive-MIMO joint communication and radar experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report rates as throughput by multiplying with the system bandwidth.
        #[arg(long)]
        throughput: bool,
    },
    /// Parse and check a config file without running it.
    Validate { config: PathBuf },
    /// Print the default configuration.
    Defaults,
}

/// An unreadable config file counts as a config error.
fn load(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        RunError::Config(ConfigErrors(vec![ConfigError {
            line: 0,
            column: 0,
            message: format!("cannot read {}: {e}", path.display()),
        }]))
    })?;
    Ok(parse_config(&text)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Defaults => {
            print!("{}", serialize(&ExperimentConfig::default()));
            Ok(())
        }
        Command::Validate { config } => load(&config).map(|cfg| {
            println!(
                "{}: ok ({}, bandwidth {} Hz, noise {:e} W)",
                config.display(),
                cfg.experiment.name(),
                cfg.bandwidth_hz(),
                cfg.noise_var()
            );
        }),
        Command::Run { config, out, throughput } => match load(&config) {
            Err(e) => Err(e),
            Ok(cfg) => {
                let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output));
                run_campaign(&cfg).and_then(|result| {
                    let files = write_outputs(&result, &cfg, &dir)?;
                    print!("{}", summary(&result, throughput.then(|| cfg.bandwidth_hz())));
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    Ok(())
                })
            }
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
