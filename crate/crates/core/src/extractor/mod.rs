//! Minimal test-case extraction.
//!
//! The model is asked for the smallest standalone program that still trips a
//! given analyzer check. Each candidate is stripped of comments, obfuscated,
//! and re-analyzed with the same tool and suppressions; the loop stops at the
//! first candidate that reproduces the target check id.

pub mod lexer;
pub mod obfuscate;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::{analyze_filtered, SuppressionRule, Tool, Warning, WarningSource};
use crate::corpus::{Provenance, TestCase};
use crate::gateway::{ChatMessage, Gateway};
use crate::text::{fence, first_fenced_block};

pub use lexer::{is_c_keyword, tokenize_c, LexError, LexErrorKind, Token, TokenKind, C_KEYWORDS};
pub use obfuscate::{has_hint, obfuscate_identifiers, strip_comments, Allowlist, RenameMap};

/// Default bound on model round trips per extraction.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;

/// Instruction sent on every extraction attempt.
///
/// Placeholders: `{language}`, `{tool}`, `{warning}`, `{code}`.
pub const EXTRACT_INSTRUCTION: &str = "The {language} file below makes {tool} report this warning:\n\
\n\
{warning}\n\
\n\
Write the smallest complete, standalone {language} program that still makes {tool} report the same warning. \
It must compile on its own. Keep only the code needed to trigger the warning. \
Reply with the whole program in a single fenced code block.\n\
\n\
{code}";

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    pub max_attempts: u32,
    pub obfuscate: bool,
    pub strip_comments: bool,
    pub tool: Tool,
    pub target_check_id: String,
    /// Applied to every candidate's analysis, as for the original.
    pub suppressions: Vec<SuppressionRule>,
    pub allowlist: Allowlist,
}

impl ExtractionConfig {
    pub fn new(tool: Tool, target_check_id: impl Into<String>) -> ExtractionConfig {
        ExtractionConfig {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            obfuscate: true,
            strip_comments: true,
            tool,
            target_check_id: target_check_id.into(),
            suppressions: crate::analyzers::default_suppressions(),
            allowlist: Allowlist::builtin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionAttempt {
    pub attempt_no: u32,
    pub prompt: String,
    pub response: String,
    /// The post-processed candidate that was analyzed.
    pub candidate_source: Option<String>,
    pub candidate_warnings: Vec<Warning>,
    pub matched: bool,
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionStatus {
    Validated,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub status: ExtractionStatus,
    pub target_check_id: String,
    pub model_name: String,
    pub attempts: Vec<ExtractionAttempt>,
    pub final_case: Option<TestCase>,
    pub rename_map: Option<RenameMap>,
    /// Set when the loop stopped early because of a gateway or analyzer error.
    pub abort_reason: Option<String>,
}

impl ExtractionResult {
    pub fn is_validated(&self) -> bool {
        self.status == ExtractionStatus::Validated
    }

    /// Metadata written next to an extracted case file.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "target_check_id": self.target_check_id,
            "attempts": self.attempts.len(),
            "model_name": self.model_name,
            "rename_map": self.rename_map.as_ref().map(|m| &m.pairs),
        })
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("max_attempts must be at least 1")]
    ZeroAttempts,
    #[error("target check id is empty")]
    EmptyTarget,
    #[error("analyzer is {actual} but the extraction is configured for {expected}")]
    ToolMismatch { expected: Tool, actual: Tool },
    #[error("could not prepare a scratch directory: {0}")]
    Scratch(#[from] std::io::Error),
}

/// Builds the prompt for one attempt. `previous` carries the prior
/// candidate (if any) and why it was rejected.
pub fn extraction_prompt(
    original: &TestCase,
    target: &Warning,
    tool: Tool,
    previous: Option<(&Option<String>, &str)>,
) -> String {
    let language = original.language.display_name();
    let mut prompt = String::new();
    let mut rest = EXTRACT_INSTRUCTION;
    // Single pass so substituted text is never rescanned.
    while let Some(open) = rest.find('{') {
        prompt.push_str(&rest[..open]);
        let tail = &rest[open..];
        let (value, consumed) = if tail.starts_with("{language}") {
            (language.to_string(), "{language}".len())
        } else if tail.starts_with("{tool}") {
            (tool.name().to_string(), "{tool}".len())
        } else if tail.starts_with("{warning}") {
            (target.prompt_line(), "{warning}".len())
        } else if tail.starts_with("{code}") {
            (fence(&original.source_text), "{code}".len())
        } else {
            ("{".to_string(), 1)
        };
        prompt.push_str(&value);
        rest = &tail[consumed..];
    }
    prompt.push_str(rest);

    if let Some((candidate, reason)) = previous {
        prompt.push_str("\n\nYour previous answer was rejected");
        match candidate {
            Some(code) => {
                prompt.push_str(". It was:\n\n");
                prompt.push_str(&fence(code));
                prompt.push_str("\n\nReason: ");
            }
            None => prompt.push_str(". Reason: "),
        }
        prompt.push_str(reason);
        prompt.push_str("\nTry again.");
    }
    prompt
}

/// Applies the configured comment stripping and obfuscation.
pub fn post_process(source: &str, config: &ExtractionConfig) -> Result<(String, Option<RenameMap>), LexError> {
    let stripped = if config.strip_comments {
        strip_comments(source)?
    } else {
        source.to_string()
    };
    if config.obfuscate {
        let (out, map) = obfuscate_identifiers(&stripped, &config.allowlist)?;
        Ok((out, Some(map)))
    } else {
        // Still lex so that malformed candidates are rejected consistently.
        tokenize_c(&stripped)?;
        Ok((stripped, None))
    }
}

/// Runs the extract, post-process, re-analyze loop for one case.
///
/// Gateway and analyzer failures end the loop with status `failed` and an
/// `abort_reason`; the attempts made so far are kept.
pub fn extract_case(
    original: &TestCase,
    target: &Warning,
    gateway: &Gateway,
    analyzer: &dyn WarningSource,
    config: &ExtractionConfig,
) -> Result<ExtractionResult, ExtractError> {
    if config.max_attempts == 0 {
        return Err(ExtractError::ZeroAttempts);
    }
    if config.target_check_id.is_empty() {
        return Err(ExtractError::EmptyTarget);
    }
    if analyzer.tool() != config.tool {
        return Err(ExtractError::ToolMismatch {
            expected: config.tool,
            actual: analyzer.tool(),
        });
    }

    let scratch = tempfile::Builder::new().prefix("warnforge-extract-").tempdir()?;
    let candidate_path: PathBuf = scratch.path().join(format!("candidate.{}", original.language.extension()));

    let mut result = ExtractionResult {
        status: ExtractionStatus::Failed,
        target_check_id: config.target_check_id.clone(),
        model_name: gateway.model_name().to_string(),
        attempts: Vec::new(),
        final_case: None,
        rename_map: None,
        abort_reason: None,
    };
    let mut feedback: Option<(Option<String>, String)> = None;

    for attempt_no in 1..=config.max_attempts {
        let prompt = extraction_prompt(
            original,
            target,
            config.tool,
            feedback.as_ref().map(|(c, r)| (c, r.as_str())),
        );
        let request = gateway.request(vec![ChatMessage::user(prompt.clone())]);
        let response = match gateway.cached_complete(&request) {
            Ok(r) => r.content,
            Err(e) => {
                tracing::warn!(case = %original.id, attempt_no, error = %e, "model request failed");
                result.abort_reason = Some(format!("model request failed: {e}"));
                return Ok(result);
            }
        };
        let mut attempt = ExtractionAttempt {
            attempt_no,
            prompt,
            response,
            candidate_source: None,
            candidate_warnings: Vec::new(),
            matched: false,
            failure_reason: None,
        };

        let Some(block) = first_fenced_block(&attempt.response) else {
            attempt.failure_reason = Some("no code block".to_string());
            feedback = Some((None, "no code block".to_string()));
            result.attempts.push(attempt);
            continue;
        };
        let (candidate, rename_map) = match post_process(&block, config) {
            Ok(v) => v,
            Err(e) => {
                let reason = format!("lex error: {e}");
                attempt.failure_reason = Some(reason.clone());
                feedback = Some((Some(block), reason));
                result.attempts.push(attempt);
                continue;
            }
        };
        attempt.candidate_source = Some(candidate.clone());

        std::fs::write(&candidate_path, &candidate)?;
        let kept = match analyze_filtered(analyzer, &candidate_path, &config.suppressions) {
            Ok((_, kept)) => kept,
            Err(e) => {
                tracing::warn!(case = %original.id, attempt_no, error = %e, "analysis of candidate failed");
                result.abort_reason = Some(format!("analysis failed: {e}"));
                result.attempts.push(attempt);
                return Ok(result);
            }
        };
        attempt.matched = kept.iter().any(|w| w.check_id == config.target_check_id);
        attempt.candidate_warnings = kept;

        if attempt.matched {
            tracing::info!(case = %original.id, attempt_no, "candidate reproduces {}", config.target_check_id);
            result.final_case = Some(extracted_case(original, &config.target_check_id, candidate));
            result.rename_map = rename_map;
            result.status = ExtractionStatus::Validated;
            result.attempts.push(attempt);
            return Ok(result);
        }

        let reason = missing_warning_reason(&config.target_check_id, &attempt.candidate_warnings);
        tracing::info!(case = %original.id, attempt_no, "{reason}");
        attempt.failure_reason = Some(reason.clone());
        feedback = Some((Some(candidate), reason));
        result.attempts.push(attempt);
    }
    Ok(result)
}

fn missing_warning_reason(target: &str, found: &[Warning]) -> String {
    if found.is_empty() {
        return format!("the analyzer reported no warnings; expected check id {target}");
    }
    let mut ids: Vec<&str> = found.iter().map(|w| w.check_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    format!("expected check id {target} but the analyzer reported only: {}", ids.join(", "))
}

fn extracted_case(original: &TestCase, check_id: &str, source_text: String) -> TestCase {
    let id = format!("{}-min", original.id);
    TestCase {
        path: PathBuf::from(format!("{id}.{}", original.language.extension())),
        name: format!("{} (extracted, {check_id})", original.name),
        id,
        cwe: original.cwe,
        language: original.language,
        source_text,
        expected_check_ids: Some(vec![check_id.to_string()]),
        provenance: Provenance::Extracted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::{AnalyzerError, AnalyzerRun, Severity};
    use crate::corpus::Language;
    use crate::gateway::{CacheMode, FailOnUseTransport, ModelEndpoint, ScriptedTransport};
    use std::path::Path;
    use std::sync::Arc;

    /// Reports `zerodiv` for any file containing "/ 0".
    struct DivScanner;

    impl WarningSource for DivScanner {
        fn tool(&self) -> Tool {
            Tool::Cppcheck
        }

        fn analyze(&self, file: &Path) -> Result<AnalyzerRun, AnalyzerError> {
            let text = std::fs::read_to_string(file)?;
            let warnings = text
                .lines()
                .enumerate()
                .filter(|(_, l)| l.contains("/ 0"))
                .map(|(i, _)| Warning {
                    tool: Tool::Cppcheck,
                    check_id: "zerodiv".into(),
                    severity: Severity::Error,
                    file: file.display().to_string(),
                    line: i as u32 + 1,
                    column: None,
                    message: "Division by zero.".into(),
                    cwe: Some(369),
                })
                .collect();
            Ok(AnalyzerRun {
                tool: Tool::Cppcheck,
                command: vec!["div-scanner".into()],
                exit_code: 0,
                raw_output: String::new(),
                warnings,
                duration_ms: 0,
                tool_version: "test".into(),
            })
        }

        fn version(&self) -> String {
            "test".into()
        }
    }

    fn original() -> TestCase {
        TestCase {
            id: "dz01".into(),
            cwe: 369,
            name: "divide by zero".into(),
            language: Language::C,
            path: "dz01.c".into(),
            source_text: "int goodG2B() { return 1; }\nint badSink() { int x = 100 / 0; return x; }\n".into(),
            expected_check_ids: None,
            provenance: Provenance::Fixture,
        }
    }

    fn target() -> Warning {
        DivScanner
            .analyze_text(&original().source_text)
            .into_iter()
            .next()
            .unwrap()
    }

    impl DivScanner {
        fn analyze_text(&self, text: &str) -> Vec<Warning> {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("o.c");
            std::fs::write(&p, text).unwrap();
            self.analyze(&p).unwrap().warnings
        }
    }

    fn gateway(t: Arc<dyn crate::gateway::Transport>) -> Gateway {
        Gateway::with_transport(ModelEndpoint::new("http://127.0.0.1:9", "stub"), t, None, CacheMode::Off).unwrap()
    }

    const GOOD: &str = "Here:\n```c\n/* FLAW */\nint main(void) { int badVal = 7 / 0; return badVal; }\n```\n";
    const HELLO: &str = "```c\n#include <stdio.h>\nint main(void) { printf(\"hi\\n\"); return 0; }\n```";

    #[test]
    fn validates_on_first_attempt() {
        let t = Arc::new(ScriptedTransport::new([GOOD]));
        let cfg = ExtractionConfig::new(Tool::Cppcheck, "zerodiv");
        let r = extract_case(&original(), &target(), &gateway(t.clone()), &DivScanner, &cfg).unwrap();
        assert!(r.is_validated());
        assert_eq!(r.attempts.len(), 1);
        assert_eq!(t.calls(), 1);
        let case = r.final_case.unwrap();
        assert_eq!(case.provenance, Provenance::Extracted);
        assert_eq!(case.source_text, "\nint main(void) { int v1 = 7 / 0; return v1; }");
        assert_eq!(r.rename_map.unwrap().get("badVal"), Some("v1"));
    }

    #[test]
    fn fails_after_max_attempts() {
        let t = Arc::new(ScriptedTransport::new([HELLO]));
        let mut cfg = ExtractionConfig::new(Tool::Cppcheck, "zerodiv");
        cfg.max_attempts = 4;
        let r = extract_case(&original(), &target(), &gateway(t.clone()), &DivScanner, &cfg).unwrap();
        assert_eq!(r.status, ExtractionStatus::Failed);
        assert_eq!(r.attempts.len(), 4);
        assert_eq!(t.calls(), 4);
        assert!(r.attempts.iter().all(|a| !a.matched));
        assert!(r.final_case.is_none() && r.abort_reason.is_none());
    }

    #[test]
    fn prose_reply_is_recorded_and_loop_continues() {
        let t = Arc::new(ScriptedTransport::new(["I cannot help with that.", GOOD]));
        let cfg = ExtractionConfig::new(Tool::Cppcheck, "zerodiv");
        let r = extract_case(&original(), &target(), &gateway(t.clone()), &DivScanner, &cfg).unwrap();
        assert!(r.is_validated());
        assert_eq!(r.attempts.len(), 2);
        assert_eq!(r.attempts[0].failure_reason.as_deref(), Some("no code block"));
        assert!(r.attempts[1].prompt.contains("Reason: no code block"));
    }

    #[test]
    fn retry_prompt_carries_previous_candidate() {
        let t = Arc::new(ScriptedTransport::new([HELLO, GOOD]));
        let cfg = ExtractionConfig::new(Tool::Cppcheck, "zerodiv");
        let r = extract_case(&original(), &target(), &gateway(t), &DivScanner, &cfg).unwrap();
        let second = &r.attempts[1].prompt;
        assert!(second.contains("printf(\"hi\\n\")"));
        assert!(second.contains("reported no warnings; expected check id zerodiv"));
    }

    #[test]
    fn gateway_error_aborts() {
        let t = Arc::new(FailOnUseTransport::default());
        let cfg = ExtractionConfig::new(Tool::Cppcheck, "zerodiv");
        let r = extract_case(&original(), &target(), &gateway(t.clone()), &DivScanner, &cfg).unwrap();
        assert_eq!(r.status, ExtractionStatus::Failed);
        assert!(r.attempts.is_empty());
        assert!(r.abort_reason.unwrap().contains("model request failed"));
        assert_eq!(t.attempts(), 1);
    }

    #[test]
    fn rejects_mismatched_tool() {
        let t = Arc::new(ScriptedTransport::new([GOOD]));
        let cfg = ExtractionConfig::new(Tool::ClangCheck, "zerodiv");
        let err = extract_case(&original(), &target(), &gateway(t), &DivScanner, &cfg).unwrap_err();
        assert!(matches!(err, ExtractError::ToolMismatch { .. }));
    }

    #[test]
    fn prompt_mentions_tool_warning_and_code() {
        let p = extraction_prompt(&original(), &target(), Tool::Cppcheck, None);
        assert!(p.starts_with("The C file below makes cppcheck report this warning:"));
        assert!(p.contains("[zerodiv] Division by zero."));
        assert!(p.contains("```\nint goodG2B()"));
        assert!(!p.contains("rejected"));
    }
}
