//! The `dymgnn` command-line pipeline: synth → build → train → eval / explain.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use commands::Context;
use config::RunConfig;
use error::{CliError, EXIT_CONFIG, EXIT_OK, EXIT_OTHER};
use manifest::{sibling, RunManifest};

pub const OUT_ENV: &str = "DYMGNN_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "dymgnn",
    version,
    about = "Dynamic multilayer GNNs for loan default prediction"
)]
pub struct Cli {
    /// Config file with one [section] per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root for relative input and output paths.
    #[arg(long, global = true, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Override a setting: KEY=VALUE or SECTION.KEY=VALUE. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic loan panel CSV.
    Synth(SynthArgs),
    /// Clean, scale and window a panel into a dataset directory.
    Build(BuildArgs),
    /// Train a model configuration and write a checkpoint.
    Train(TrainArgs),
    /// Score checkpoints on a held-out window with bootstrap intervals.
    Eval(EvalArgs),
    /// Export Shapley attributions, dependency tables and attention profiles.
    Explain(ExplainArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub loans: Option<usize>,
    #[arg(long)]
    pub months: Option<usize>,
    #[arg(long)]
    pub contagion: Option<f64>,
    #[arg(long)]
    pub base_rate: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub panel: Option<String>,
    /// area, company or both.
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long)]
    pub isolate_fraction: Option<f64>,
    #[arg(long)]
    pub window_len: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<String>,
    /// e.g. gat-lstm-att, gcn-gru, static-gat, logreg, mlp.
    #[arg(long)]
    pub model: Option<String>,
    /// Window indices such as 0-10 or 0,2,4.
    #[arg(long)]
    pub train_windows: Option<String>,
    #[arg(long)]
    pub validation_window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub embedding: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: Option<String>,
    /// Checkpoint to score. Repeatable; rows share the bootstrap seed.
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<String>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub checkpoint: Option<String>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Permutations sampled for the Shapley estimate.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Features exported as dependency tables.
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<String>,
}

fn push<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        out.push((key, v.to_string()));
    }
}

// `Display` spells large floats out in full, which TOML then reads as an
// overflowing integer; `Debug` keeps the exponent and a decimal point.
fn push_float(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<f64>) {
    if let Some(v) = v {
        out.push((key, format!("{v:?}")));
    }
}

impl Command {
    pub fn section(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Build(_) => "build",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Explain(_) => "explain",
        }
    }

    fn flag_overrides(&self) -> Vec<(&'static str, String)> {
        let mut o = Vec::new();
        match self {
            Command::Synth(a) => {
                push(&mut o, "loans", &a.loans);
                push(&mut o, "months", &a.months);
                push_float(&mut o, "contagion", &a.contagion);
                push_float(&mut o, "base_rate", &a.base_rate);
                push(&mut o, "seed", &a.seed);
                push(&mut o, "output", &a.output);
            }
            Command::Build(a) => {
                push(&mut o, "panel", &a.panel);
                push(&mut o, "layers", &a.layers);
                push_float(&mut o, "isolate_fraction", &a.isolate_fraction);
                push(&mut o, "window_len", &a.window_len);
                push(&mut o, "horizon", &a.horizon);
                push(&mut o, "seed", &a.seed);
                push(&mut o, "output", &a.output);
            }
            Command::Train(a) => {
                push(&mut o, "data", &a.data);
                push(&mut o, "model", &a.model);
                push(&mut o, "train_windows", &a.train_windows);
                push(&mut o, "validation_window", &a.validation_window);
                push(&mut o, "epochs", &a.epochs);
                push_float(&mut o, "learning_rate", &a.learning_rate);
                push(&mut o, "embedding", &a.embedding);
                push(&mut o, "seed", &a.seed);
                push(&mut o, "output", &a.output);
            }
            Command::Eval(a) => {
                push(&mut o, "data", &a.data);
                if !a.checkpoints.is_empty() {
                    o.push(("checkpoints", a.checkpoints.join(",")));
                }
                push(&mut o, "window", &a.window);
                push_float(&mut o, "threshold", &a.threshold);
                push(&mut o, "resamples", &a.resamples);
                push(&mut o, "seed", &a.seed);
                push(&mut o, "output", &a.output);
            }
            Command::Explain(a) => {
                push(&mut o, "data", &a.data);
                push(&mut o, "checkpoint", &a.checkpoint);
                push(&mut o, "window", &a.window);
                push(&mut o, "samples", &a.samples);
                push(&mut o, "top_k", &a.top_k);
                push(&mut o, "seed", &a.seed);
                push(&mut o, "output", &a.output);
            }
        }
        o
    }
}

impl Cli {
    /// Defaults, then the config file, then `--set`, then subcommand flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::new(self.command.section())?;
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for spec in &self.overrides {
            cfg.apply_override(spec)?;
        }
        for (key, value) in self.command.flag_overrides() {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }
}

/// Runs a parsed invocation and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let ctx = Context {
        root: cli.out.clone().unwrap_or_else(|| PathBuf::from(".")),
    };
    let primary = ctx.path(&cfg.str("output"));
    let mut manifest = RunManifest::new(cfg.section.as_str(), cfg.table());

    let outcome = (|| -> Result<(), CliError> {
        std::fs::create_dir_all(&ctx.root)?;
        if let Some(parent) = primary.parent() {
            std::fs::create_dir_all(parent)?;
        }
        dymgnn::fsutil::write_atomic(&sibling(&primary, ".config.toml"), cfg.render().as_bytes())?;
        let start = std::time::Instant::now();
        let r = match &cli.command {
            Command::Synth(_) => commands::synth::run(&ctx, &cfg, &mut manifest),
            Command::Build(_) => commands::build::run(&ctx, &cfg, &mut manifest),
            Command::Train(_) => commands::train::run(&ctx, &cfg, &mut manifest),
            Command::Eval(_) => commands::eval::run(&ctx, &cfg, &mut manifest),
            Command::Explain(_) => commands::explain::run(&ctx, &cfg, &mut manifest),
        };
        manifest.timing("total", start.elapsed().as_secs_f64());
        r
    })();

    let manifest_path = sibling(&primary, ".manifest.toml");
    if let Err(e) = manifest.write(&manifest_path, &outcome) {
        eprintln!(
            "error: could not write manifest {}: {e}",
            manifest_path.display()
        );
        if outcome.is_ok() {
            return EXIT_OTHER;
        }
    }
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    execute(&cli)
}
