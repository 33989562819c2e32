//! The `sharecast` command line: every pipeline stage as a subcommand that
//! reads a run configuration and writes artifacts into an output directory.

pub mod pipeline;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sharecast::config::{Precision, RunConfig};
use sharecast::Result;

#[derive(Debug, Parser)]
#[command(name = "sharecast", version, about = "Share-network purchase prediction pipeline")]
pub struct Cli {
    /// Run configuration (TOML). Without it every key takes its default.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `paths.out`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Train and evaluate in 64-bit floats (the default).
    #[arg(long, global = true, conflicts_with = "f32")]
    pub f64: bool,
    /// Train and evaluate in 32-bit floats.
    #[arg(long, global = true)]
    pub f32: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic catalog, share, purchase and browse logs.
    Gen {
        /// Overrides `synth.users`.
        #[arg(long)]
        users: Option<usize>,
    },
    /// Build the per-step share network snapshot from the logs.
    Build,
    /// Materialize labeled queries from the snapshot and purchases.
    Queries,
    /// Write the conversion report and its CSV tables.
    Analyze {
        /// Overrides `analytics.horizon` (seconds).
        #[arg(long)]
        horizon: Option<i64>,
    },
    /// Train the model and save the best-validation checkpoint.
    Train(TrainArgs),
    /// Score the test queries with the saved checkpoint.
    Eval,
    /// Train the base model and each variant on one split.
    Ablate {
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated variants; overrides `ablation.variants`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        variants: Option<Vec<String>>,
    },
    /// Fit and score the logistic-regression baseline.
    Baseline,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Overrides `train.max_epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides `train.patience`.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Overrides `model.hidden_size`.
    #[arg(long)]
    pub hidden: Option<usize>,
}

fn set<T: std::fmt::Debug>(slot: &mut T, value: Option<T>, key: &str, flag: &str) {
    if let Some(v) = value {
        log::info!("{flag} overrides {key} (was {slot:?}, now {v:?})");
        *slot = v;
    }
}

impl TrainArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.train.max_epochs, self.epochs, "train.max_epochs", "--epochs");
        set(&mut cfg.train.patience, self.patience, "train.patience", "--patience");
        set(&mut cfg.model.hidden_size, self.hidden, "model.hidden_size", "--hidden");
    }
}

impl Cli {
    /// The configuration file with every flag applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set(&mut cfg.paths.out, self.out.clone().map(Some), "paths.out", "--out");
        set(&mut cfg.seed, self.seed.map(Some), "seed", "--seed");
        if self.f32 {
            set(&mut cfg.precision, Some(Precision::F32), "precision", "--f32");
        } else if self.f64 {
            set(&mut cfg.precision, Some(Precision::F64), "precision", "--f64");
        }
        match &self.command {
            Command::Gen { users } => set(&mut cfg.synth.users, *users, "synth.users", "--users"),
            Command::Analyze { horizon } => set(&mut cfg.analytics.horizon, horizon.map(Some), "analytics.horizon", "--horizon"),
            Command::Train(t) => t.apply(&mut cfg),
            Command::Ablate { train, variants } => {
                train.apply(&mut cfg);
                set(&mut cfg.ablation.variants, variants.clone(), "ablation.variants", "--variants");
            }
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one subcommand and returns its one-line summary.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = cli.resolve()?;
    let out = cfg.out_dir()?.to_path_buf();
    let _lock = pipeline::OutputLock::acquire(&out)?;
    match &cli.command {
        Command::Gen { .. } => pipeline::gen(&cfg),
        Command::Build => pipeline::build(&cfg),
        Command::Queries => pipeline::queries(&cfg),
        Command::Analyze { .. } => pipeline::analyze(&cfg),
        Command::Train(_) => pipeline::train(&cfg),
        Command::Eval => pipeline::eval(&cfg),
        Command::Ablate { .. } => pipeline::ablate(&cfg),
        Command::Baseline => pipeline::baseline(&cfg),
    }
}
