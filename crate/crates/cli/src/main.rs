mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, UsageError};

#[derive(Parser, Debug)]
#[command(
    name = "stereosync",
    version,
    about = "Frame-delay estimation for stereo video pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic stereo dataset and its manifest.
    GenData(Common),
    /// Dense optical flow between consecutive frames of a dataset.
    Flow(Common),
    /// Train a frame matcher and, with `--delay dense`, the delay network.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from the model already in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Estimate the delay between two frame directories.
    Sync {
        #[command(flatten)]
        common: Common,
        /// Directory with the left frames.
        #[arg(long)]
        left: Option<PathBuf>,
        /// Directory with the right frames.
        #[arg(long)]
        right: Option<PathBuf>,
        /// Trained matcher parameters.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the cross-dataset experiment grid.
    Evaluate(Common),
    /// Chart an existing results table.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Results table to chart (default: <out>/results.csv).
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<usize>,
    /// raw | flow
    #[arg(long)]
    input: Option<String>,
    /// siamese | triplet-euc | triplet-sim | oracle
    #[arg(long)]
    matcher: Option<String>,
    /// heatmap | dense
    #[arg(long)]
    delay: Option<String>,
    /// Input dataset directory (with left/ and right/).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Full resolution and the published training hyperparameters.
    #[arg(long)]
    paper_defaults: bool,
}

impl Common {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<RunConfig, UsageError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(m) = &self.matcher {
            cfg.set("matcher", m)?;
        }
        cfg.align_hyperparameters();
        if self.paper_defaults {
            cfg.pin_paper_defaults();
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let flags = [
            ("seed", self.seed.map(|s| s.to_string())),
            ("out", path(&self.out)),
            ("resolution", self.resolution.map(|r| r.to_string())),
            ("input", self.input.clone()),
            ("delay", self.delay.clone()),
            ("data", path(&self.data)),
        ];
        for (k, v) in flags.iter().chain(extra) {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    match cli.command {
        Command::GenData(c) => commands::gen_data(&c.resolve(&[])?),
        Command::Flow(c) => commands::flow(&c.resolve(&[])?),
        Command::Train { common, resume } => {
            commands::train(&common.resolve(&[])?, common.force, resume)
        }
        Command::Sync {
            common,
            left,
            right,
            model,
        } => commands::sync(&common.resolve(&[
            ("left", path(&left)),
            ("right", path(&right)),
            ("model", path(&model)),
        ])?),
        Command::Evaluate(c) => commands::evaluate(&c.resolve(&[])?, c.force),
        Command::Plot { common, results } => {
            commands::plot(&common.resolve(&[("results", path(&results))])?)
        }
    }
}

/// 1 for usage and configuration problems, 2 for everything the data or
/// the file system caused.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<stereosync::Error>() {
        Some(stereosync::Error::InvalidArgument(_) | stereosync::Error::UnknownParameter(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
