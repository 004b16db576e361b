//! `envloss` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use envloss::config::SweepAxis;
use envloss::Error;

#[derive(Parser, Debug)]
#[command(
    name = "envloss",
    version,
    about = "Environmental-loss trajectory regressors"
)]
pub struct Cli {
    /// Experiment config (TOML or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Which scene a single-scene command works on.
#[derive(Args, Debug, Clone)]
pub struct SceneArg {
    /// Scene JSON file; when absent a scene is generated.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Generator seed used when no scene file is given.
    #[arg(long, default_value_t = 0)]
    pub scene_seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a scene corpus (one JSON file per window).
    Gen {
        /// Sequences to generate; defaults to the config value.
        #[arg(long)]
        sequences: Option<usize>,
    },
    /// Rasterize a scene to `<id>.ppm`, `<id>.road.pgm` and `<id>.traffic.pgm`.
    Rasterize {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 400)]
        size: usize,
    },
    /// Dump the social, road and environmental loss landscapes.
    Fields {
        #[command(flatten)]
        scene: SceneArg,
        #[arg(long, default_value_t = 200)]
        size: usize,
        #[arg(long, default_value_t = 1.0)]
        k1: f64,
        #[arg(long, default_value_t = 1.0)]
        k2: f64,
    },
    /// Train one model and evaluate it on the validation split.
    Train {
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        k2: Option<f64>,
    },
    /// Evaluate a checkpoint on a scene corpus or the validation split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Scene directory; defaults to the configured validation split.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Sweep one loss weight across the configured values and seeds.
    Sweep {
        #[arg(long, value_parser = parse_axis)]
        axis: Option<SweepAxis>,
    },
    /// Train the four ablation variants and report them with the expert row.
    Ablate,
    /// Guided-backprop heatmap and awareness indexes for one scene.
    Explain {
        /// Checkpoint; a seeded untrained model is used when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        scene: SceneArg,
    },
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    match s.to_ascii_lowercase().as_str() {
        "k1" => Ok(SweepAxis::K1),
        "k2" => Ok(SweepAxis::K2),
        _ => Err(format!("unknown axis {s:?}, expected k1 or k2")),
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Divergence { .. } | Error::MissingForwardCache => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    match commands::run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
