//! Static analyzer invocation and output normalization.
//!
//! Both tools run as subprocesses with fixed flags; their output is parsed
//! into [`Warning`] records. Suppression is applied as a separate step so an
//! [`AnalyzerRun`] always reflects exactly what the tool printed.

mod clang;
mod cppcheck;
mod detect;
pub(crate) mod process;
mod suppress;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clang::{clang_slug, parse_clang_diagnostics, ClangParse};
pub use cppcheck::parse_cppcheck_xml;
pub use detect::{detect_tools, ToolAvailability, ToolReport};
pub use suppress::{apply_suppressions, default_suppressions, SuppressionRule};

/// Default per-file subprocess timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tool {
    #[serde(rename = "cppcheck")]
    Cppcheck,
    #[serde(rename = "clang-check")]
    ClangCheck,
}

impl Tool {
    pub const ALL: [Tool; 2] = [Tool::Cppcheck, Tool::ClangCheck];

    pub fn name(self) -> &'static str {
        match self {
            Tool::Cppcheck => "cppcheck",
            Tool::ClangCheck => "clang-check",
        }
    }

    /// The fixed analysis flags, not including the input file.
    pub fn base_flags(self) -> &'static [&'static str] {
        match self {
            Tool::Cppcheck => &["--enable=all", "--inconclusive", "--xml", "--xml-version=2"],
            Tool::ClangCheck => &["--analyze", "--fixit"],
        }
    }

    /// Full argument vector (without the executable) for analyzing `file`.
    pub fn arguments(self, file: &Path, extra_args: &[String]) -> Vec<String> {
        let mut args: Vec<String> = self.base_flags().iter().map(|s| s.to_string()).collect();
        args.extend(extra_args.iter().cloned());
        args.push(file.to_string_lossy().into_owned());
        if self == Tool::ClangCheck {
            // no compilation database: everything after `--` is compiler flags
            args.push("--".to_string());
        }
        args
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tool {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cppcheck" => Ok(Tool::Cppcheck),
            "clang-check" => Ok(Tool::ClangCheck),
            other => Err(format!("unknown tool \"{other}\" (expected cppcheck or clang-check)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Style,
    Performance,
    Portability,
    Information,
    Note,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Style => "style",
            Severity::Performance => "performance",
            Severity::Portability => "portability",
            Severity::Information => "information",
            Severity::Note => "note",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One normalized diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Warning {
    pub tool: Tool,
    pub check_id: String,
    pub severity: Severity,
    pub file: String,
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<u32>,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cwe: Option<u32>,
}

impl Warning {
    /// `<file>:<line>: [<check_id>] <message>`, the form used inside prompts.
    ///
    /// Only the file name is kept: analyzers may print absolute paths, and a
    /// prompt (hence its cache key) must not depend on where a file lives.
    pub fn prompt_line(&self) -> String {
        format!("{}:{}: [{}] {}", self.file_name(), self.line, self.check_id, self.message)
    }

    /// The last component of `file`.
    pub fn file_name(&self) -> &str {
        self.file.rsplit(['/', '\\']).next().unwrap_or(&self.file)
    }

    /// Ordering used for user-visible listings: file, line, check id.
    pub fn sort_key(&self) -> (&str, u32, &str, Option<u32>, &str) {
        (&self.file, self.line, &self.check_id, self.column, &self.message)
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:", self.file, self.line)?;
        if let Some(col) = self.column {
            write!(f, "{col}:")?;
        }
        write!(f, " {}: [{}] {}", self.severity, self.check_id, self.message)
    }
}

/// Sorts warnings by file, then line, then check id.
pub fn sort_warnings(warnings: &mut [Warning]) {
    warnings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// The outcome of one analyzer subprocess.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerRun {
    pub tool: Tool,
    pub command: Vec<String>,
    pub exit_code: i32,
    /// Captured stdout followed by stderr.
    pub raw_output: String,
    /// Parse of `raw_output`, before suppressions.
    pub warnings: Vec<Warning>,
    pub duration_ms: u64,
    pub tool_version: String,
}

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("{tool} executable not found (configured as \"{configured}\")")]
    ToolMissing { tool: Tool, configured: String },
    #[error("input file {path} does not exist (command: {command})")]
    InputMissing { path: PathBuf, command: String },
    #[error("failed to launch `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("`{command}` timed out after {timeout_s} s")]
    Timeout { command: String, timeout_s: u64 },
    #[error("`{command}` terminated abnormally ({status}): {excerpt}")]
    Crashed {
        command: String,
        status: String,
        excerpt: String,
    },
    #[error("could not parse cppcheck XML: {0}")]
    Xml(String),
    #[error("analysis I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything that can analyze a file and report warnings.
///
/// [`Analyzer`] is the real implementation; tests substitute fakes.
pub trait WarningSource: Send + Sync {
    fn tool(&self) -> Tool;

    /// Runs the analysis; warnings are returned unsuppressed.
    fn analyze(&self, file: &Path) -> Result<AnalyzerRun, AnalyzerError>;

    /// Version string recorded alongside results.
    fn version(&self) -> String;

    /// The argument vector `analyze` would run for `file`. Used as part of
    /// result cache keys.
    fn command_for(&self, file: &Path) -> Vec<String> {
        self.tool().arguments(file, &[])
    }
}

/// Analyzes `file` and applies `rules`.
pub fn analyze_filtered(
    source: &dyn WarningSource,
    file: &Path,
    rules: &[SuppressionRule],
) -> Result<(AnalyzerRun, Vec<Warning>), AnalyzerError> {
    let run = source.analyze(file)?;
    let kept = apply_suppressions(&run.warnings, rules);
    Ok((run, kept))
}

/// A resolved analyzer executable.
#[derive(Debug, Clone)]
pub struct Analyzer {
    tool: Tool,
    executable: PathBuf,
    version: String,
    timeout: Duration,
    extra_args: Vec<String>,
}

impl Analyzer {
    /// Resolves `configured` (a path or a bare command name) and records the
    /// tool's version string.
    pub fn resolve(tool: Tool, configured: &str, timeout: Duration) -> Result<Analyzer, AnalyzerError> {
        let executable = detect::resolve_executable(tool, configured).ok_or_else(|| AnalyzerError::ToolMissing {
            tool,
            configured: configured.to_string(),
        })?;
        let version = detect::probe_version(&executable).unwrap_or_else(|| "unknown".to_string());
        Ok(Analyzer {
            tool,
            executable,
            version,
            timeout,
            extra_args: Vec::new(),
        })
    }

    pub fn with_extra_args(mut self, extra_args: Vec<String>) -> Analyzer {
        self.extra_args = extra_args;
        self
    }

    pub fn executable(&self) -> &Path {
        &self.executable
    }

    pub fn command_for(&self, file: &Path) -> Vec<String> {
        let mut cmd = vec![self.executable.to_string_lossy().into_owned()];
        cmd.extend(self.tool.arguments(file, &self.extra_args));
        cmd
    }

    /// Runs the tool on `file` and parses its output.
    ///
    /// A nonzero exit is still success when the output parses and, for
    /// clang-check, yields at least one diagnostic.
    pub fn run(&self, file: &Path) -> Result<AnalyzerRun, AnalyzerError> {
        // clang-check writes a .plist report into its working directory, so
        // it runs from a scratch directory with an absolute input path.
        let scratch = match self.tool {
            Tool::ClangCheck => Some(tempfile::Builder::new().prefix("warnforge-clang-").tempdir()?),
            Tool::Cppcheck => None,
        };
        let absolute;
        let file = if scratch.is_some() {
            absolute = std::path::absolute(file)?;
            absolute.as_path()
        } else {
            file
        };
        let command = self.command_for(file);
        if !file.is_file() {
            return Err(AnalyzerError::InputMissing {
                path: file.to_path_buf(),
                command: command.join(" "),
            });
        }

        // clang-check's --fixit rewrites the input in place; keep the
        // original bytes so the caller's file is left as it was.
        let snapshot = match self.tool {
            Tool::ClangCheck => Some(std::fs::read(file)?),
            Tool::Cppcheck => None,
        };

        let started = Instant::now();
        let out = process::run_in(&command, self.timeout, scratch.as_ref().map(|d| d.path()));
        if let Some(original) = snapshot {
            if std::fs::read(file).map(|now| now != original).unwrap_or(true) {
                std::fs::write(file, &original)?;
            }
        }
        let out = out?;
        let duration_ms = started.elapsed().as_millis() as u64;

        let mut raw_output = out.stdout;
        raw_output.push_str(&out.stderr);

        let Some(exit_code) = out.exit_code else {
            return Err(AnalyzerError::Crashed {
                command: command.join(" "),
                status: "killed by signal".to_string(),
                excerpt: excerpt(&raw_output),
            });
        };

        let warnings = match self.tool {
            Tool::Cppcheck => parse_cppcheck_xml(&raw_output).map_err(|e| {
                if exit_code != 0 {
                    AnalyzerError::Crashed {
                        command: command.join(" "),
                        status: format!("exit code {exit_code}"),
                        excerpt: excerpt(&raw_output),
                    }
                } else {
                    e
                }
            })?,
            Tool::ClangCheck => {
                let parsed = parse_clang_diagnostics(&raw_output);
                if exit_code != 0 && parsed.warnings.is_empty() {
                    return Err(AnalyzerError::Crashed {
                        command: command.join(" "),
                        status: format!("exit code {exit_code}"),
                        excerpt: excerpt(&raw_output),
                    });
                }
                parsed.warnings
            }
        };

        Ok(AnalyzerRun {
            tool: self.tool,
            command,
            exit_code,
            raw_output,
            warnings,
            duration_ms,
            tool_version: self.version.clone(),
        })
    }
}

impl WarningSource for Analyzer {
    fn tool(&self) -> Tool {
        self.tool
    }

    fn analyze(&self, file: &Path) -> Result<AnalyzerRun, AnalyzerError> {
        self.run(file)
    }

    fn version(&self) -> String {
        self.version.clone()
    }

    fn command_for(&self, file: &Path) -> Vec<String> {
        Analyzer::command_for(self, file)
    }
}

/// Runs `cppcheck --enable=all --inconclusive --xml --xml-version=2 <file>`.
pub fn run_cppcheck(executable: &str, file: &Path, extra_args: &[String]) -> Result<AnalyzerRun, AnalyzerError> {
    Analyzer::resolve(Tool::Cppcheck, executable, DEFAULT_TIMEOUT)?
        .with_extra_args(extra_args.to_vec())
        .run(file)
}

/// Runs `clang-check --analyze --fixit <file> --`.
pub fn run_clang_check(executable: &str, file: &Path, extra_args: &[String]) -> Result<AnalyzerRun, AnalyzerError> {
    Analyzer::resolve(Tool::ClangCheck, executable, DEFAULT_TIMEOUT)?
        .with_extra_args(extra_args.to_vec())
        .run(file)
}

fn excerpt(text: &str) -> String {
    const LIMIT: usize = 400;
    let t = text.trim();
    if t.len() <= LIMIT {
        return t.to_string();
    }
    let mut end = LIMIT;
    while !t.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}...", &t[..end])
}
