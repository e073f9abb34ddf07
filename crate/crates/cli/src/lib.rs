//! `screenprio` command-line driver.
//!
//! Every command reads a TOML [`manifest::Manifest`]; flags override the
//! corresponding manifest keys. Exit status is 0 on success, 1 for user or
//! validation errors and 2 for internal failures.

pub mod commands;
pub mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{record_path, write_atomic};

#[derive(Debug, Parser)]
#[command(name = "screenprio", version, about = "Screening prioritisation with dense retrieval and relevance feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check corpus, topics, pools, qrels and embeddings for consistency.
    Validate,
    /// Write hash-projection embeddings for the corpus and topics.
    EmbedSynthetic {
        /// Embedding dimension (default from the manifest, else 768).
        #[arg(long)]
        dim: Option<usize>,
        /// Output file (default: the manifest's embeddings path).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate screening sessions, one record file per topic.
    Run,
    /// Simulate every strategy x weights x k cell; existing cells are kept.
    Sweep,
    /// Aggregate record files into tables.
    Eval {
        /// Directory of record files (default: <out>/records).
        #[arg(long)]
        records: Option<PathBuf>,
        /// Qrels file (default: the manifest's).
        #[arg(long)]
        qrels: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true, default_value = "screenprio.toml")]
    pub manifest: PathBuf,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated topic ids.
    #[arg(long, global = true, value_delimiter = ',')]
    pub topics: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    /// Rocchio weights as `alpha,beta,gamma`.
    #[arg(long, global = true)]
    pub weights: Option<String>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Stop after this many iterations.
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,
    /// Baseline group, `strategy[:alpha,beta,gamma][@k]`.
    #[arg(long, global = true)]
    pub baseline: Option<String>,
    #[arg(long, global = true)]
    pub bind: Option<String>,
}

/// Error with an exit-code class.
#[derive(Debug)]
pub enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn user(e: impl Into<anyhow::Error>) -> Self {
        Failure::User(e.into())
    }

    pub fn internal(e: impl Into<anyhow::Error>) -> Self {
        Failure::Internal(e.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::User(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::User(e) | Failure::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn execute(cli: Cli) -> CmdResult {
    let opts = &cli.opts;
    match cli.command {
        Command::Validate => commands::validate(opts),
        Command::EmbedSynthetic { dim, output } => commands::embed_synthetic(opts, dim, output),
        Command::Run => commands::run(opts).map(|_| ()),
        Command::Sweep => commands::sweep(opts).map(|_| ()),
        Command::Eval { records, qrels } => commands::eval(opts, records, qrels),
        Command::Serve => commands::serve(opts),
    }
}

/// Runs the CLI and maps failures to exit codes.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
