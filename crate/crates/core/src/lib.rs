//! Static-analysis warning pipeline.
//!
//! Runs cppcheck and clang-check over C/C++ test cases, asks a chat-completion
//! model to explain each warning and suggest a fix, validates fixes and
//! extracted minimal test cases by re-analysis, and summarises which CWE
//! classes draw warnings from which tool.
//!
//! The crate is organised along the pipeline:
//!
//! - [`corpus`]: test cases, manifests and the bundled fixtures.
//! - [`analyzers`]: subprocess wrappers and output parsers for both tools.
//! - [`gateway`]: OpenAI-compatible chat client with a record/replay cache.
//! - [`augmenter`]: prompt construction, response parsing, fix validation.
//! - [`extractor`]: C lexer, comment stripping, identifier obfuscation and
//!   the extract-and-revalidate loop.
//! - [`characterizer`]: per-CWE warned-case counts and table rendering.

pub mod analyzers;
pub mod augmenter;
pub mod characterizer;
pub mod config;
pub mod corpus;
pub mod extractor;
pub mod fixtures;
pub mod gateway;
pub mod fsutil;
pub mod text;
pub mod timestamp;

pub use analyzers::{
    apply_suppressions, AnalyzerError, AnalyzerRun, Analyzer, Severity, SuppressionRule, Tool,
    Warning, WarningSource,
};
pub use augmenter::{AugmentedWarning, FixStatus, FixValidation, PromptTemplate};
pub use characterizer::{CharacterizationReport, CweStats, Percent};
pub use config::Config;
pub use corpus::{CorpusManifest, CweClass, Language, Provenance, TestCase};
pub use extractor::{ExtractionConfig, ExtractionResult, RenameMap};
pub use gateway::{CacheMode, ChatRequest, ChatResponse, Gateway, ModelEndpoint};
