use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subheat_cli::{describe_experiments, load, run, ConfigError, RunError};

#[derive(Parser)]
#[command(
    name = "subheat",
    about = "Spectral laboratory driver: subordinated heat semigroups, Besov/Triebel-Lizorkin norms, stable-subordinator moments, caloric smoothing and a fractional Cauchy solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; exit 0 iff all gates pass.
    Run {
        config: PathBuf,
        /// Re-root relative output directories (overrides SUBHEAT_OUTPUT_DIR).
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// List the available experiment kinds.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            output_root,
        } => {
            let parsed = match load(&config) {
                Ok(c) => c,
                Err(e) => return config_failure(&config, e),
            };
            let root = output_root.or_else(|| std::env::var_os("SUBHEAT_OUTPUT_DIR").map(Into::into));
            match run(&parsed, root.as_deref()) {
                Ok(true) => {
                    println!("status: pass");
                    ExitCode::SUCCESS
                }
                Ok(false) => {
                    eprintln!("status: fail (a numerical gate did not pass; see summary.json)");
                    ExitCode::from(1)
                }
                Err(RunError::Config(e)) => config_failure(&config, e),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(parsed) => {
                println!(
                    "ok: '{}' experiment, output_dir = {}",
                    parsed.kind_name(),
                    parsed.output_dir()
                );
                ExitCode::SUCCESS
            }
            Err(e) => config_failure(&config, e),
        },
        Command::ListExperiments => {
            for (name, description) in describe_experiments() {
                println!("{name:<14} {description}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn config_failure(path: &std::path::Path, e: ConfigError) -> ExitCode {
    match &e {
        ConfigError::Parse(json_err) => eprintln!(
            "invalid config {}: line {}, column {}: {json_err}",
            path.display(),
            json_err.line(),
            json_err.column()
        ),
        other => eprintln!("invalid config {}: {other}", path.display()),
    }
    ExitCode::from(2)
}
