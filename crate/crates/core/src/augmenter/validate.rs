use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::analyzers::process::run_with_timeout;
use crate::analyzers::{analyze_filtered, SuppressionRule, Warning, WarningSource};
use crate::corpus::{Language, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixStatus {
    Eliminated,
    Persists,
    AnalysisFailed,
    NotAttempted,
}

impl FixStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FixStatus::Eliminated => "eliminated",
            FixStatus::Persists => "persists",
            FixStatus::AnalysisFailed => "analysis_failed",
            FixStatus::NotAttempted => "not_attempted",
        }
    }
}

impl std::fmt::Display for FixStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixValidation {
    pub status: FixStatus,
    pub target_check_ids: Vec<String>,
    pub warnings_before: Vec<Warning>,
    pub warnings_after: Vec<Warning>,
    pub fixed_source: Option<String>,
    /// Why analysis failed, when it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Result of the optional compile smoke check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compiles: Option<bool>,
}

impl FixValidation {
    pub fn analysis_failed(target_check_ids: Vec<String>, fixed_source: Option<String>, error: impl Into<String>) -> Self {
        FixValidation {
            status: FixStatus::AnalysisFailed,
            target_check_ids,
            warnings_before: Vec::new(),
            warnings_after: Vec::new(),
            fixed_source,
            error: Some(error.into()),
            compiles: None,
        }
    }

    pub fn not_attempted(target_check_ids: Vec<String>) -> Self {
        FixValidation {
            status: FixStatus::NotAttempted,
            target_check_ids,
            warnings_before: Vec::new(),
            warnings_after: Vec::new(),
            fixed_source: None,
            error: None,
            compiles: None,
        }
    }
}

/// `Eliminated` iff no warning in `warnings_after` carries a target id.
pub fn classify(target_check_ids: &[String], warnings_after: &[Warning]) -> FixStatus {
    if warnings_after.iter().any(|w| target_check_ids.contains(&w.check_id)) {
        FixStatus::Persists
    } else {
        FixStatus::Eliminated
    }
}

/// Re-analyzes `fixed_source` next to the original.
///
/// Both versions are written under the same file name into separate
/// scratch directories, analyzed with `analyzer`, and filtered by `rules`.
/// When `target_check_ids` is empty, every check id reported on the
/// original becomes a target. Scratch files are removed afterwards unless
/// analysis failed, in which case they are kept for inspection.
pub fn validate_fix(
    original: &TestCase,
    fixed_source: &str,
    analyzer: &dyn WarningSource,
    rules: &[SuppressionRule],
    target_check_ids: &[String],
) -> FixValidation {
    let targets = target_check_ids.to_vec();
    let scratch = match tempfile::Builder::new().prefix("warnforge-fix-").tempdir() {
        Ok(d) => d,
        Err(e) => return FixValidation::analysis_failed(targets, Some(fixed_source.to_string()), e.to_string()),
    };
    let analyze = |sub: &str, text: &str| -> Result<Vec<Warning>, String> {
        let dir = scratch.path().join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let path = dir.join(original.file_name());
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        analyze_filtered(analyzer, &path, rules)
            .map(|(_, kept)| kept)
            .map_err(|e| e.to_string())
    };

    let outcome = analyze("before", &original.source_text).and_then(|before| Ok((before, analyze("after", fixed_source)?)));
    match outcome {
        Ok((before, after)) => {
            let targets = if targets.is_empty() {
                let mut ids: Vec<String> = before.iter().map(|w| w.check_id.clone()).collect();
                ids.sort();
                ids.dedup();
                ids
            } else {
                targets
            };
            FixValidation {
                status: classify(&targets, &after),
                target_check_ids: targets,
                warnings_before: before,
                warnings_after: after,
                fixed_source: Some(fixed_source.to_string()),
                error: None,
                compiles: None,
            }
        }
        Err(e) => {
            let kept = scratch.keep();
            tracing::warn!(dir = %kept.display(), "fix validation failed; scratch files kept");
            FixValidation::analysis_failed(targets, Some(fixed_source.to_string()), e)
        }
    }
}

/// Compiles `source` with `compiler` (argv prefix; the file path is
/// appended) and reports whether it exited zero.
pub fn compile_smoke_check(compiler: &[String], source: &str, language: Language) -> std::io::Result<bool> {
    let dir = tempfile::Builder::new().prefix("warnforge-cc-").tempdir()?;
    let path = dir.path().join(format!("fixed.{}", language.extension()));
    std::fs::write(&path, source)?;
    let mut argv = compiler.to_vec();
    argv.push(path.display().to_string());
    let out = run_with_timeout(&argv, Duration::from_secs(60)).map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(out.exit_code == Some(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::{AnalyzerError, AnalyzerRun, Severity, Tool};
    use crate::corpus::Provenance;
    use std::path::Path;

    /// Flags every line containing "/ 0" as zerodiv.
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
                command: vec![],
                exit_code: 0,
                raw_output: String::new(),
                warnings,
                duration_ms: 0,
                tool_version: "t".into(),
            })
        }
        fn version(&self) -> String {
            "t".into()
        }
    }

    struct Broken;

    impl WarningSource for Broken {
        fn tool(&self) -> Tool {
            Tool::Cppcheck
        }
        fn analyze(&self, _: &Path) -> Result<AnalyzerRun, AnalyzerError> {
            Err(AnalyzerError::ToolMissing {
                tool: Tool::Cppcheck,
                configured: "nope".into(),
            })
        }
        fn version(&self) -> String {
            String::new()
        }
    }

    fn case() -> TestCase {
        TestCase {
            id: "dz".into(),
            cwe: 369,
            name: "dz".into(),
            language: Language::C,
            path: "dz.c".into(),
            source_text: "int main(void) {\n  return 100 / 0;\n}\n".into(),
            expected_check_ids: None,
            provenance: Provenance::Fixture,
        }
    }

    #[test]
    fn guarded_fix_eliminates() {
        let fixed = "int main(void) {\n  int d = 0;\n  return d != 0 ? 100 / d : 0;\n}\n";
        let v = validate_fix(&case(), fixed, &DivScanner, &[], &["zerodiv".into()]);
        assert_eq!(v.status, FixStatus::Eliminated);
        assert_eq!(v.warnings_before.len(), 1);
        assert!(v.warnings_after.is_empty());
        assert!(v.warnings_before[0].file.ends_with("dz.c"));
    }

    #[test]
    fn identical_source_persists() {
        let c = case();
        let v = validate_fix(&c, &c.source_text, &DivScanner, &[], &[]);
        assert_eq!(v.status, FixStatus::Persists);
        assert_eq!(v.target_check_ids, vec!["zerodiv".to_string()]);
    }

    #[test]
    fn missing_analyzer_is_analysis_failed() {
        let v = validate_fix(&case(), "int main(void){return 0;}", &Broken, &[], &["zerodiv".into()]);
        assert_eq!(v.status, FixStatus::AnalysisFailed);
        assert!(v.error.unwrap().contains("not found"));
    }

    #[test]
    fn classification_is_reproducible_from_stored_lists() {
        let c = case();
        let v = validate_fix(&c, &c.source_text, &DivScanner, &[], &[]);
        assert_eq!(classify(&v.target_check_ids, &v.warnings_after), v.status);
    }

    #[test]
    fn suppressed_targets_count_as_eliminated() {
        let c = case();
        let rules = [SuppressionRule::new("zero*", "")];
        let v = validate_fix(&c, &c.source_text, &DivScanner, &rules, &["zerodiv".into()]);
        assert_eq!(v.status, FixStatus::Eliminated);
    }
}
