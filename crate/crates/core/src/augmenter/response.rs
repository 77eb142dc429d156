use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredResponse {
    pub explanation: String,
    pub fix: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("response does not follow the \"Explanation: ..., Fix: ...\" format ({problem})")]
pub struct FormatError {
    pub problem: &'static str,
    pub raw: String,
}

fn explanation_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bexplanation:").unwrap())
}

fn fix_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bfix:").unwrap())
}

/// Splits a reply into its explanation and fix paragraphs.
///
/// Markers are matched case-insensitively and must start a word, so
/// `prefix:` is not a fix marker. Both parts are whitespace-normalized;
/// markdown emphasis hugging a marker (`**Explanation:**`) and the comma
/// that the requested format puts before `Fix:` are dropped.
pub fn parse_structured_response(text: &str) -> Result<StructuredResponse, FormatError> {
    let fail = |problem| FormatError {
        problem,
        raw: text.to_string(),
    };
    let exp = explanation_marker().find(text).ok_or_else(|| fail("no Explanation: marker"))?;
    let fix = fix_marker()
        .find_at(text, exp.end())
        .ok_or_else(|| fail("no Fix: marker after the explanation"))?;

    let mut explanation = normalize_whitespace(&text[exp.end()..fix.start()]);
    let mut fix_text = normalize_whitespace(&text[fix.end()..]);
    trim_emphasis(&mut explanation);
    trim_emphasis(&mut fix_text);
    if explanation.ends_with(',') {
        explanation.pop();
        explanation.truncate(explanation.trim_end().len());
    }
    if explanation.is_empty() {
        return Err(fail("empty explanation"));
    }
    if fix_text.is_empty() {
        return Err(fail("empty fix"));
    }
    Ok(StructuredResponse {
        explanation,
        fix: fix_text,
    })
}

/// Removes leading `*` runs and trailing `*` runs left by bold markers.
fn trim_emphasis(s: &mut String) {
    let trimmed = s.trim_start_matches('*').trim_end_matches('*').trim();
    if trimmed.len() != s.len() {
        *s = trimmed.to_string();
    }
}
