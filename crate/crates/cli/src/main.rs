//! `xgen`: check, simulate and generate X-language models, and score
//! generated model sets against a reference.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use xgen_core::template::PortConvention;

#[derive(Debug, Parser)]
#[command(name = "xgen", version, about = "X-language model generation and evaluation")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for generation requests and dataset sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Machine-readable output on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Generator backend: stub=PATH, replay=DIR, http=URL or record=DIR.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// How connection endpoints map to port directions.
    #[arg(long, global = true)]
    pub port_convention: Option<PortConvention>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceFormat {
    Tsv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and link `.x` files; exit 1 on any error.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Name of the top-level unit.
        #[arg(long)]
        top: Option<String>,
    },
    /// Simulate a model set and print its port events.
    Simulate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        top: Option<String>,
        #[arg(long)]
        end_time: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, default_value = "tsv")]
        format: TraceFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the system composition and corpus slices from a document.
    Extract {
        document: PathBuf,
        /// JSON list of composition edits.
        #[arg(long)]
        edits: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a model set from a design document.
    Pipeline {
        document: PathBuf,
        #[arg(long)]
        edits: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a masked-completion training set as JSON lines.
    Dataset {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// File with one instruction paraphrase per line.
        #[arg(long)]
        paraphrases: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score generated model sets against a reference set.
    Evaluate {
        /// Directories (or files) of generated units, one per model set.
        #[arg(required = true)]
        models: Vec<PathBuf>,
        #[arg(long)]
        reference: PathBuf,
        /// `{unit: {n, notes}}` file applied to every set.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten an evaluation report into one CSV row per unit.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
