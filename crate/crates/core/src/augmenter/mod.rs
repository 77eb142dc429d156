//! Warning explanations from a chat model, and validation of suggested
//! fixes by re-analysis.

mod prompt;
mod report;
mod response;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::Warning;
use crate::corpus::TestCase;
use crate::gateway::{ChatMessage, Gateway, GatewayError};
use crate::text::{fence, first_fenced_block};

pub use prompt::{
    build_prompt, format_warnings, tool_label, PromptTemplate, TemplateError, BOTH_TOOLS, DEFAULT_TEMPLATE_ID,
    EXPLAIN_INSTRUCTION, FIXED_CODE_TEMPLATE_ID, FORMAT_SENTENCE,
};
pub use report::{render_report, ReportFormat, ReportMeta};
pub use response::{parse_structured_response, FormatError, StructuredResponse};
pub use validate::{classify, compile_smoke_check, validate_fix, FixStatus, FixValidation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedWarning {
    pub case_id: String,
    /// Tool label used in the prompt.
    pub tool: String,
    pub warnings: Vec<Warning>,
    pub explanation: String,
    pub fix: String,
    pub model_name: String,
    pub prompt_id: String,
    pub prompt: String,
    /// The reply the explanation and fix were parsed from.
    pub raw_response: String,
    /// 1 when the first reply ignored the format and was retried.
    pub format_retries: u32,
    pub created_at: String,
}

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("case {0} has no warnings to explain")]
    NoWarnings(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("model ignored the response format twice for case {case_id}")]
    Format {
        case_id: String,
        /// Both replies, in order.
        raw_responses: Vec<String>,
        #[source]
        source: FormatError,
    },
    #[error("the suggested fix for case {0} is empty")]
    EmptyFix(String),
    #[error("reply for case {case_id} contains no fenced code block")]
    NoCodeBlock { case_id: String, raw_response: String },
}

/// Prompts the model about `warnings` in `case` and parses the reply.
///
/// A reply that does not follow the format is retried once with the format
/// sentence appended to the original prompt.
pub fn augment(
    case: &TestCase,
    warnings: &[Warning],
    gateway: &Gateway,
    template: &PromptTemplate,
) -> Result<AugmentedWarning, AugmentError> {
    if warnings.is_empty() {
        return Err(AugmentError::NoWarnings(case.id.clone()));
    }
    let tool = tool_label(warnings);
    let prompt = build_prompt(template, tool, &case.source_text, warnings)?;

    let first = gateway.cached_complete(&gateway.request(vec![ChatMessage::user(prompt.clone())]))?;
    let (parsed, raw, used_prompt, retries) = match parse_structured_response(&first.content) {
        Ok(p) => (p, first.content, prompt, 0),
        Err(_) => {
            tracing::info!(case = %case.id, "reply ignored the format; retrying once");
            let retry_prompt = format!("{prompt}\n\n{FORMAT_SENTENCE}");
            let second = gateway.cached_complete(&gateway.request(vec![ChatMessage::user(retry_prompt.clone())]))?;
            match parse_structured_response(&second.content) {
                Ok(p) => (p, second.content, retry_prompt, 1),
                Err(source) => {
                    return Err(AugmentError::Format {
                        case_id: case.id.clone(),
                        raw_responses: vec![first.content, second.content],
                        source,
                    })
                }
            }
        }
    };

    Ok(AugmentedWarning {
        case_id: case.id.clone(),
        tool: tool.to_string(),
        warnings: warnings.to_vec(),
        explanation: parsed.explanation,
        fix: parsed.fix,
        model_name: gateway.model_name().to_string(),
        prompt_id: template.id.clone(),
        prompt: used_prompt,
        raw_response: raw,
        format_retries: retries,
        created_at: crate::timestamp::now_rfc3339(),
    })
}

/// Asks for the complete corrected file and returns its first fenced block.
pub fn request_fixed_code(
    case: &TestCase,
    augmented: &AugmentedWarning,
    gateway: &Gateway,
    template: &PromptTemplate,
) -> Result<String, AugmentError> {
    if augmented.fix.trim().is_empty() {
        return Err(AugmentError::EmptyFix(case.id.clone()));
    }
    let prompt = template.render(&[
        ("language", case.language.display_name()),
        ("fix", &augmented.fix),
        ("code", &fence(&case.source_text)),
    ])?;
    let reply = gateway.cached_complete(&gateway.request(vec![ChatMessage::user(prompt)]))?;
    first_fenced_block(&reply.content).ok_or_else(|| AugmentError::NoCodeBlock {
        case_id: case.id.clone(),
        raw_response: reply.content,
    })
}
