//! Command-line front end over the recommendation engine: prepare a corpus,
//! train embedding methods, rank and evaluate them, and compare their output.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use caserec_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::Effective;
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "caserec",
    version,
    about = "Document recommendation benchmark: embeddings, top-k retrieval, ranking metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Command-line overrides for values from the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Recommendations per query
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for every random choice (init, walks, sampling)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training threads
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for vectors, reports, and tables
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only the first N tokens of each document feed the text methods
    #[arg(long)]
    pub token_limit: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the corpus; write its stats and the relevance judgments
    Build {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train embedding methods and store their vectors
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these configured methods (repeatable)
        #[arg(long = "method")]
        methods: Vec<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Rank every judged query with every method; write report and tables
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these configured methods (repeatable)
        #[arg(long = "method")]
        methods: Vec<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print one method's ranked list for one document
    Recommend {
        #[arg(long)]
        config: PathBuf,
        /// Configured method name
        #[arg(long)]
        method: String,
        /// Seed document id
        #[arg(long)]
        doc: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print how much the methods' recommendation sets overlap
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these configured methods (repeatable)
        #[arg(long = "method")]
        methods: Vec<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { config, overrides } => {
            let config = RunConfig::load(&config)?;
            let eff = Effective::new(&config, &overrides);
            commands::build(&config, &eff)
        }
        Command::Train {
            config,
            methods,
            overrides,
        } => {
            let config = RunConfig::load(&config)?;
            let eff = Effective::new(&config, &overrides);
            commands::train(&config, &eff, &methods)
        }
        Command::Evaluate {
            config,
            methods,
            overrides,
        } => {
            let config = RunConfig::load(&config)?;
            let eff = Effective::new(&config, &overrides);
            commands::evaluate(&config, &eff, &methods)
        }
        Command::Recommend {
            config,
            method,
            doc,
            overrides,
        } => {
            let config = RunConfig::load(&config)?;
            let eff = Effective::new(&config, &overrides);
            commands::recommend(&config, &eff, &method, &doc)
        }
        Command::Compare {
            config,
            methods,
            overrides,
        } => {
            let config = RunConfig::load(&config)?;
            let eff = Effective::new(&config, &overrides);
            commands::compare(&config, &eff, &methods)
        }
    }
}

/// 1 for internal numeric failures, 2 for anything the user can fix.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite(_) | Error::OutsideBall { .. } => 1,
        _ => 2,
    }
}
