use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use warnforge::augmenter::ReportFormat;
use warnforge::characterizer::TableFormat;
use warnforge::{CacheMode, Tool};

#[derive(Debug, Parser)]
#[command(name = "warnforge", version, about = "Explain, validate and characterize static-analysis warnings")]
pub struct Cli {
    /// Config file (default: ./warnforge.json when present)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// More log output on stderr (repeatable)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    /// Only log errors
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override values from the config file.
#[derive(Debug, Args)]
pub struct Overrides {
    /// Model response cache mode
    #[arg(long, global = true, value_name = "MODE")]
    pub cache_mode: Option<CacheMode>,

    /// Model response cache directory
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Model name sent to the endpoint
    #[arg(long, global = true)]
    pub model: Option<String>,

    /// Endpoint base URL, e.g. http://localhost:11434
    #[arg(long, global = true, value_name = "URL")]
    pub base_url: Option<String>,

    /// Path or name of the cppcheck executable
    #[arg(long, global = true, value_name = "PATH")]
    pub cppcheck: Option<String>,

    /// Path or name of the clang-check executable
    #[arg(long, global = true, value_name = "PATH")]
    pub clang_check: Option<String>,

    /// Report every warning, ignoring configured suppressions
    #[arg(long, global = true)]
    pub no_suppressions: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an analyzer and print its warnings after suppressions
    Analyze(AnalyzeArgs),
    /// Ask the model to explain warnings and suggest fixes
    Augment(AugmentArgs),
    /// Extract a minimal test case that still triggers a warning
    Extract(ExtractArgs),
    /// Count warned cases per CWE across a corpus
    Characterize(CharacterizeArgs),
    /// Check whether a fixed file still triggers the original warnings
    ValidateFix(ValidateFixArgs),
    /// Report which analyzers and endpoints are available
    Doctor,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Source files to analyze
    #[arg(required = true, value_name = "FILE")]
    pub paths: Vec<PathBuf>,

    /// Analyzer to run
    #[arg(long, default_value = "cppcheck")]
    pub tool: Tool,

    /// Print warnings as a JSON array
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Source files whose warnings are explained
    #[arg(required = true, value_name = "FILE")]
    pub paths: Vec<PathBuf>,

    /// Analyzer to run
    #[arg(long, default_value = "cppcheck")]
    pub tool: Tool,

    /// Built-in template id or path to a template file
    #[arg(long, value_name = "ID|PATH")]
    pub template: Option<String>,

    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Report layout
    #[arg(long, default_value = "markdown")]
    pub format: ReportFormat,

    /// One prompt per warning instead of one per file
    #[arg(long)]
    pub per_warning: bool,

    /// Also request full fixed files, write them here and validate them
    #[arg(long, value_name = "DIR")]
    pub fixed_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Test case to shrink
    #[arg(value_name = "FILE")]
    pub path: PathBuf,

    /// Analyzer whose warning must survive
    #[arg(long, default_value = "cppcheck")]
    pub tool: Tool,

    /// Check id to preserve (default: the first warning's)
    #[arg(long)]
    pub check_id: Option<String>,

    /// CWE number recorded for the extracted case (default: from the path
    /// or a manifest next to FILE)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub cwe: Option<u32>,

    #[arg(long, default_value_t = warnforge::extractor::DEFAULT_MAX_ATTEMPTS, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_attempts: u32,

    #[arg(long, default_value = "extracted", value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Keep the model's identifiers
    #[arg(long)]
    pub no_obfuscate: bool,

    /// Keep comments in the candidate
    #[arg(long)]
    pub keep_comments: bool,

    /// Print the full extraction record as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// Corpus manifest (manifest.json)
    #[arg(value_name = "MANIFEST")]
    pub manifest: PathBuf,

    /// Comma-separated analyzers, one table column each
    #[arg(long, value_delimiter = ',', default_value = "cppcheck,clang-check")]
    pub tools: Vec<Tool>,

    /// Table layout
    #[arg(long, default_value = "markdown")]
    pub format: TableFormat,

    /// Write the table here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Concurrent analyzer processes (default from config)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub parallelism: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ValidateFixArgs {
    /// File that triggered the warnings
    #[arg(value_name = "ORIGINAL")]
    pub original: PathBuf,

    /// Candidate fixed version of it
    #[arg(value_name = "FIXED")]
    pub fixed: PathBuf,

    /// Analyzer to run
    #[arg(long, default_value = "cppcheck")]
    pub tool: Tool,

    /// Check ids the fix must remove (default: all reported on ORIGINAL)
    #[arg(long = "check-id", value_name = "ID")]
    pub check_ids: Vec<String>,

    /// Also compile FIXED with the configured compiler
    #[arg(long)]
    pub compile: bool,

    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}
