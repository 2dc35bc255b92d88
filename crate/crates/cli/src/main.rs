use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use teleop_cli::commands::{cmd_annotate, cmd_simulate};
use teleop_cli::config::load_file;
use teleop_cli::pipeline::cmd_retarget;
use teleop_cli::review::{serve, ReviewConfig};
use teleop_cli::{CliError, PipelineConfig};
use teleop_core::annotate::SegmentationParams;

#[derive(Parser)]
#[command(name = "teleop", version, about = "Retarget, simulate and annotate whole-body teleoperation captures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a raw capture into a retargeted, chunked episode file.
    Retarget {
        /// Capture file: JSON lines of meta, tracker, joints, gripper and speech records.
        #[arg(short, long)]
        input: PathBuf,
        /// Pipeline config (TOML, or JSON by extension).
        #[arg(short, long)]
        config: PathBuf,
        /// Episode file to write.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a closed-loop base tracking trial on a scripted trajectory.
    Simulate {
        /// Trajectory spec: waypoints, head height knots, sway and seed.
        #[arg(short, long)]
        spec: PathBuf,
        /// Pipeline config; its retarget and sim sections are used.
        #[arg(short, long)]
        config: PathBuf,
        /// Also print the report as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Propose subtask annotations for an episode.
    Annotate {
        /// Episode file; annotations are written next to it.
        #[arg(short, long)]
        episode: PathBuf,
        /// Segmentation parameters file.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Serve the annotation review API over a directory of episodes.
    Review {
        /// Directory holding `<id>.jsonl` episodes.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Segmentation parameters file.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Pipeline config; its action section bounds re-chunked subtask actions.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Directory of a built review UI to serve at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Retarget { input, config, output } => {
            let summary = cmd_retarget(&input, &config, &output)?;
            print!("{}", summary.to_key_values());
        }
        Command::Simulate { spec, config, csv } => print!("{}", cmd_simulate(&spec, &config, csv)?),
        Command::Annotate { episode, params } => {
            let out = cmd_annotate(&episode, params.as_deref())?;
            println!("{}", out.display());
        }
        Command::Review {
            dir,
            port,
            params,
            config,
            ui,
        } => {
            if !dir.is_dir() {
                return Err(CliError::Input(format!("{} is not a directory", dir.display())));
            }
            let params: SegmentationParams = match params {
                Some(p) => load_file(&p)?,
                None => SegmentationParams::default(),
            };
            let pipeline = match config {
                Some(c) => PipelineConfig::load(&c)?,
                None => PipelineConfig::default(),
            };
            let cfg = ReviewConfig {
                dir,
                params,
                max_step: pipeline.action.max_step,
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Input(e.to_string()))?;
            rt.block_on(serve(cfg, port, ui.as_deref()))
                .map_err(|e| CliError::Input(format!("review service: {e}")))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RETARGET_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
