use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::Warning;
use crate::text::fence;

/// The explanation request. `{tool}` stands where the analyzer names go.
pub const EXPLAIN_INSTRUCTION: &str = "Given this code and warnings produced by {tool}, can you (1) Explain why the code causing this warning should be fixed and (2) explain how to fix the warning.  Your answer should be formatted as \"Explanation: ..., Fix: ...\" and both the explanation and fix should be a single paragraph.";

/// Re-appended when a reply ignores the requested format.
pub const FORMAT_SENTENCE: &str =
    "Your answer should be formatted as \"Explanation: ..., Fix: ...\" and both the explanation and fix should be a single paragraph.";

/// Tool label used when a prompt carries warnings from both analyzers.
pub const BOTH_TOOLS: &str = "cppcheck/clang-check";

pub const DEFAULT_TEMPLATE_ID: &str = "explain";
pub const FIXED_CODE_TEMPLATE_ID: &str = "fixed-code";

const DEFAULT_TEMPLATE_BODY: &str = "\n\nCode:\n{code}\n\nWarnings:\n{warnings}\n";

const FIXED_CODE_TEMPLATE: &str = "Apply the following fix to the {language} file below.\n\
\n\
Fix: {fix}\n\
\n\
{code}\n\
\n\
Reply with the complete corrected file in a single fenced code block.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template \"{id}\" is missing the {placeholder} placeholder")]
    MissingPlaceholder { id: String, placeholder: String },
    #[error("could not read template {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            id: DEFAULT_TEMPLATE_ID.to_string(),
            text: format!("{EXPLAIN_INSTRUCTION}{DEFAULT_TEMPLATE_BODY}"),
        }
    }
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> PromptTemplate {
        PromptTemplate {
            id: id.into(),
            text: text.into(),
        }
    }

    /// The built-in follow-up asking for the whole corrected file.
    /// Placeholders: `{language}`, `{fix}`, `{code}`.
    pub fn fixed_code() -> PromptTemplate {
        PromptTemplate::new(FIXED_CODE_TEMPLATE_ID, FIXED_CODE_TEMPLATE)
    }

    /// Looks up a built-in template by id.
    pub fn builtin(id: &str) -> Option<PromptTemplate> {
        match id {
            DEFAULT_TEMPLATE_ID => Some(PromptTemplate::default()),
            FIXED_CODE_TEMPLATE_ID => Some(PromptTemplate::fixed_code()),
            _ => None,
        }
    }

    /// Reads a template from disk; the id is the file stem.
    pub fn from_file(path: &Path) -> Result<PromptTemplate, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".to_string());
        Ok(PromptTemplate { id, text })
    }

    /// The instruction paragraph: everything before the first blank line.
    pub fn instruction(&self) -> &str {
        self.text.split("\n\n").next().unwrap_or(&self.text)
    }

    /// Substitutes `{name}` placeholders in one left-to-right pass, so
    /// substituted text is never rescanned. Every name in `values` must
    /// appear; braces that name nothing in `values` are copied through.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        for (name, _) in values {
            if !self.text.contains(&format!("{{{name}}}")) {
                return Err(TemplateError::MissingPlaceholder {
                    id: self.id.clone(),
                    placeholder: format!("{{{name}}}"),
                });
            }
        }
        let mut out = String::with_capacity(self.text.len());
        let mut rest = self.text.as_str();
        'scan: while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let tail = &rest[open + 1..];
            for (name, value) in values {
                if let Some(after) = tail.strip_prefix(name).and_then(|t| t.strip_prefix('}')) {
                    out.push_str(value);
                    rest = after;
                    continue 'scan;
                }
            }
            out.push('{');
            rest = tail;
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// One line per warning: `<file>:<line>: [<check_id>] <message>`.
pub fn format_warnings(warnings: &[Warning]) -> String {
    warnings.iter().map(Warning::prompt_line).collect::<Vec<_>>().join("\n")
}

/// The tool label for a set of warnings: the single tool's name, or
/// [`BOTH_TOOLS`] when they come from both.
pub fn tool_label(warnings: &[Warning]) -> &'static str {
    match warnings.first() {
        Some(first) if warnings.iter().all(|w| w.tool == first.tool) => first.tool.name(),
        Some(_) => BOTH_TOOLS,
        None => BOTH_TOOLS,
    }
}

/// Fills `{tool}`, `{code}` (fenced verbatim) and `{warnings}`.
pub fn build_prompt(
    template: &PromptTemplate,
    tool_name: &str,
    code: &str,
    warnings: &[Warning],
) -> Result<String, TemplateError> {
    template.render(&[
        ("tool", tool_name),
        ("code", &fence(code)),
        ("warnings", &format_warnings(warnings)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::{Severity, Tool};

    fn warning(id: &str, line: u32) -> Warning {
        Warning {
            tool: Tool::Cppcheck,
            check_id: id.into(),
            severity: Severity::Error,
            file: "dz01.cpp".into(),
            line,
            column: Some(22),
            message: "Division by zero.".into(),
            cwe: Some(369),
        }
    }

    #[test]
    fn default_template_has_each_placeholder_once() {
        let t = PromptTemplate::default();
        for p in ["{tool}", "{code}", "{warnings}"] {
            assert_eq!(t.text.matches(p).count(), 1, "{p}");
        }
    }

    #[test]
    fn prompt_starts_with_instruction() {
        let p = build_prompt(&PromptTemplate::default(), "cppcheck", "int x = 100 / 0;", &[warning("zerodiv", 5)]).unwrap();
        assert!(p.starts_with("Given this code and warnings produced by cppcheck, can you"));
        assert!(p.contains("```\nint x = 100 / 0;\n```"));
        assert!(p.ends_with("Warnings:\ndz01.cpp:5: [zerodiv] Division by zero.\n"));
    }

    #[test]
    fn missing_placeholder_is_an_error() {
        let t = PromptTemplate::new("short", "{tool} {code}");
        let err = build_prompt(&t, "cppcheck", "x", &[]).unwrap_err();
        assert_eq!(
            err,
            TemplateError::MissingPlaceholder {
                id: "short".into(),
                placeholder: "{warnings}".into()
            }
        );
    }

    #[test]
    fn warnings_listed_in_input_order() {
        let p = build_prompt(&PromptTemplate::default(), "cppcheck", "x", &[warning("b", 9), warning("a", 2)]).unwrap();
        let tail = p.split("Warnings:\n").nth(1).unwrap();
        assert_eq!(tail, "dz01.cpp:9: [b] Division by zero.\ndz01.cpp:2: [a] Division by zero.\n");
    }

    #[test]
    fn code_braces_are_not_rescanned() {
        let p = build_prompt(&PromptTemplate::default(), "cppcheck", "int f() { return {warnings}; }", &[]).unwrap();
        assert!(p.contains("int f() { return {warnings}; }"));
    }

    #[test]
    fn format_sentence_closes_instruction() {
        assert!(EXPLAIN_INSTRUCTION.ends_with(FORMAT_SENTENCE));
        assert_eq!(PromptTemplate::default().instruction(), EXPLAIN_INSTRUCTION);
    }

    #[test]
    fn mixed_tools_use_combined_label() {
        let mut w = vec![warning("zerodiv", 1)];
        assert_eq!(tool_label(&w), "cppcheck");
        w.push(Warning {
            tool: Tool::ClangCheck,
            ..warning("core.DivideZero", 1)
        });
        assert_eq!(tool_label(&w), BOTH_TOOLS);
    }
}
