use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crashrecon::editor::DEFAULT_MIN_GAP;
use crashrecon::metrics::DEFAULT_MATCH_THRESHOLD;
use crashrecon_cli::{CliError, EvalOptions, ServeOptions};

/// Reconstructs crash scenarios from dashcam perception output.
#[derive(Debug, Parser)]
#[command(name = "crashrecon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct scenarios from perception directories.
    Extract {
        /// Input directories holding detections.jsonl and depth/.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Scenario file, or a directory when several inputs are given.
        #[arg(short, long)]
        output: PathBuf,
        /// Configuration for every input instead of each input's config.toml.
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Render a scene script into a synthetic input directory.
    Synth {
        script: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Focal length in pixels.
        #[arg(long, default_value_t = 720.0)]
        focal: f64,
        #[arg(long, default_value_t = 1242)]
        width: usize,
        #[arg(long, default_value_t = 375)]
        height: usize,
    },
    /// Score estimated tracks against ground truth with CLEAR-MOT metrics.
    Eval {
        ground_truth: PathBuf,
        estimate: PathBuf,
        /// Match distance in meters.
        #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
        threshold: f64,
        /// Odometry that places ego-relative ground truth in the world frame.
        #[arg(long)]
        odometry: Option<PathBuf>,
        /// Sequence name shown in the report.
        #[arg(long, default_value = "sequence")]
        name: String,
        /// Write JSON instead of the table.
        #[arg(long)]
        json: bool,
        /// Report file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve a scenario file to the editor.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Start separation below which POST /check reports a conflict, m.
        #[arg(long, default_value_t = DEFAULT_MIN_GAP)]
        min_gap: f64,
        /// Directory of editor static files.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract { inputs, output, config } => {
            crashrecon_cli::extract(&inputs, &output, config.as_deref())?;
        }
        Command::Synth { script, output, focal, width, height } => {
            crashrecon_cli::synth(&script, &output, focal, width, height)?;
        }
        Command::Eval { ground_truth, estimate, threshold, odometry, name, json, output } => {
            let opts = EvalOptions { threshold, odometry, name, json };
            let (_, text) = crashrecon_cli::eval(&ground_truth, &estimate, &opts)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?
                }
                None => print!("{text}"),
            }
        }
        Command::Serve { scenario, port, host, min_gap, assets } => {
            let opts = ServeOptions { addr: SocketAddr::new(host, port), min_gap, assets };
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
            runtime.block_on(crashrecon_cli::serve(&scenario, &opts))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
