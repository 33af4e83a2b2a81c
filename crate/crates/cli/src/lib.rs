//! Command-line surface and HTTP service for the continuity engine.

pub mod commands;
pub mod config;
pub mod service;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};
use continuity_core::Error;

use commands::{Experiment, SynthArgs};
use config::{BackendSpec, Config, EncoderSpec, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFRA: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;

/// The service could not bind its listening address.
#[derive(Debug)]
pub struct BindError(pub String);

impl fmt::Display for BindError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot bind {}", self.0)
    }
}

impl std::error::Error for BindError {}

#[derive(Debug, Parser)]
#[command(name = "continuity", version, about = "Topic-continuity scoring for conversations")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = "CONTINUITY_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub topic: Option<String>,
    /// stub | recorded:<path> | remote:<url>
    #[arg(long, global = true)]
    pub backend: Option<BackendSpec>,
    /// stub | remote:<url>
    #[arg(long, global = true)]
    pub encoder: Option<EncoderSpec>,
    /// Use the remote pair scorer at this URL.
    #[arg(long, global = true, env = "CONTINUITY_SCORER_ENDPOINT")]
    pub scorer_endpoint: Option<String>,
    /// Use the remote encoder at this URL.
    #[arg(long, global = true, env = "CONTINUITY_ENCODER_ENDPOINT")]
    pub encoder_endpoint: Option<String>,
    #[arg(long, global = true)]
    pub topic_ood: Option<PathBuf>,
    #[arg(long, global = true)]
    pub background_ood: Option<PathBuf>,
    /// Baseline context budget in whitespace tokens (0 = unlimited).
    #[arg(long, global = true)]
    pub token_budget: Option<usize>,
    #[arg(long, global = true, env = "CONTINUITY_BIND")]
    pub bind: Option<String>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score each sentence of a conversation against the ones before it.
    Score {
        /// One sentence per line, optionally `speaker<TAB>text`; stdin if omitted.
        input: Option<PathBuf>,
        /// Keep the history at the first sentence instead of accepting each scored one.
        #[arg(long)]
        no_accept: bool,
    },
    /// Train and save an OOD model from a file of sentences.
    TrainOod {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment over a dataset and write a JSON report.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long, default_value = "report.json")]
        output: PathBuf,
    },
    /// Generate a synthetic labeled dataset.
    Synth {
        /// Generator settings (TOML); built-in defaults if omitted.
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write topic.txt and background.txt training corpora here.
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        corpus_size: usize,
    },
    /// Serve POST /v1/evaluate and GET /healthz.
    Serve,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            topic: self.topic.clone(),
            backend: self.backend.clone(),
            encoder: self.encoder.clone(),
            scorer_endpoint: self.scorer_endpoint.clone(),
            encoder_endpoint: self.encoder_endpoint.clone(),
            topic_ood: self.topic_ood.clone(),
            background_ood: self.background_ood.clone(),
            token_budget: self.token_budget,
            bind: self.bind.clone(),
        }
    }

    pub fn resolve_config(&self) -> anyhow::Result<Config> {
        let mut cfg = Config::load(self.config.as_deref())?;
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::BackendUnavailable(_) | Error::Protocol(_) => EXIT_INFRA,
                Error::EmptyResult(_) => EXIT_EMPTY,
                _ => EXIT_INPUT,
            };
        }
        if cause.downcast_ref::<BindError>().is_some() {
            return EXIT_INFRA;
        }
    }
    EXIT_INPUT
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    init_logging(cli.verbose);
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Score { input, no_accept } => commands::score(&cfg, input.as_deref(), *no_accept),
        Command::TrainOod {
            input,
            output,
            seed,
        } => commands::train_ood(&cfg, input, output, *seed),
        Command::Eval {
            dataset,
            experiment,
            output,
        } => commands::eval(&cfg, dataset, *experiment, output),
        Command::Synth {
            generator,
            output,
            seed,
            corpus_dir,
            corpus_size,
        } => commands::synth(SynthArgs {
            generator: generator.as_deref(),
            output,
            seed: *seed,
            corpus_dir: corpus_dir.clone(),
            corpus_size: *corpus_size,
        }),
        Command::Serve => commands::serve(&cfg),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
