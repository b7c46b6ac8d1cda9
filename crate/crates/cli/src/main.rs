use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod data;
mod manifest;
mod probe;
mod train;

use config::RunConfig;

/// A bad flag, config entry, or missing input; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Parser)]
#[command(name = "hcrn", version, about = "Hierarchical character-to-dialogue recurrent networks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Model size preset: small or large
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// f32 or f64
    #[arg(long, global = true)]
    dtype: Option<String>,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Clean raw transcripts, merge segments, and report length statistics
    Preprocess(data::PreprocessArgs),
    /// Write a synthetic dialogue corpus and its tag list
    Synth(data::SynthArgs),
    /// Train the character encoder as a word autoencoder
    PretrainWord(train::PretrainArgs),
    /// Train a sentence- or discourse-stage classifier
    Train(train::TrainArgs),
    /// Classification error of a model on a corpus split
    Eval(probe::EvalArgs),
    /// Spell words back through a word-stage model
    Reconstruct(probe::ReconstructArgs),
    /// Nearest words in the word-vector space
    Nn(probe::NnArgs),
    /// Learning curves from stacked versus random initialization
    CompareInit(train::CompareArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Preprocess(_) => "preprocess",
            Command::Synth(_) => "synth",
            Command::PretrainWord(_) => "pretrain-word",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Reconstruct(_) => "reconstruct",
            Command::Nn(_) => "nn",
            Command::CompareInit(_) => "compare-init",
        }
    }
}

fn resolve(g: &Global) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &g.config {
        cfg.apply_file(p)?;
    }
    for pair in &g.overrides {
        cfg.set_pair(pair)?;
    }
    if let Some(p) = &g.preset {
        cfg.set("preset", p)?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(d) = &g.dtype {
        cfg.set("dtype", d)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(&cli.global)?;
    let name = cli.command.name();
    log::debug!("resolved config: {cfg:?}");
    match cli.command {
        Command::Preprocess(a) => data::preprocess(&a, &cfg, name),
        Command::Synth(a) => data::synth(&a, &cfg, name),
        Command::PretrainWord(a) => train::pretrain_word(&a, &cfg, name),
        Command::Train(a) => train::train(&a, &cfg, name),
        Command::Eval(a) => probe::eval(&a, &cfg, name),
        Command::Reconstruct(a) => probe::reconstruct(&a, &cfg, name),
        Command::Nn(a) => probe::nn(&a, &cfg, name),
        Command::CompareInit(a) => train::compare(&a, &cfg, name),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

/// Calls `$f::<f32>` or `$f::<f64>` by a runtime dtype.
#[macro_export]
macro_rules! with_dtype {
    ($dtype:expr, $f:ident($($arg:expr),* $(,)?)) => {
        match $dtype {
            hcrn::DType::F32 => $f::<f32>($($arg),*),
            hcrn::DType::F64 => $f::<f64>($($arg),*),
        }
    };
}
