use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::AugmentedWarning;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format \"{other}\" (expected markdown or json)")),
        }
    }
}

/// Run-level facts printed in the markdown header.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReportMeta {
    pub created_at: String,
    pub model_name: String,
    pub tool: String,
    /// Case ids that were analyzed but produced no warnings.
    pub cases_without_warnings: Vec<String>,
}

/// Renders augmented warnings sorted by case id.
///
/// JSON output is an array of items with a fixed field order. Markdown has
/// one section per case followed by notes for cases without warnings.
pub fn render_report(items: &[AugmentedWarning], format: ReportFormat, meta: &ReportMeta) -> String {
    let mut sorted: Vec<&AugmentedWarning> = items.iter().collect();
    sorted.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&sorted).expect("augmented warnings serialize");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => markdown(&sorted, meta),
    }
}

fn markdown(items: &[&AugmentedWarning], meta: &ReportMeta) -> String {
    let mut out = String::from("# Warning explanations\n\n");
    let _ = writeln!(out, "- Generated: {}", meta.created_at);
    if !meta.model_name.is_empty() {
        let _ = writeln!(out, "- Model: {}", meta.model_name);
    }
    if !meta.tool.is_empty() {
        let _ = writeln!(out, "- Tool: {}", meta.tool);
    }
    let _ = writeln!(out, "- Cases explained: {}", items.len());

    if items.is_empty() {
        out.push_str("\nNo warnings were explained in this run.\n");
    }
    for item in items {
        let _ = write!(out, "\n## {}\n\n### Warnings\n\n", item.case_id);
        for w in &item.warnings {
            let _ = writeln!(out, "- `{}`", w.prompt_line());
        }
        let _ = write!(out, "\n### Explanation\n\n{}\n\n### Fix\n\n{}\n\n", item.explanation, item.fix);
        let _ = writeln!(out, "_Model: {}, template: {}_", item.model_name, item.prompt_id);
    }
    if !meta.cases_without_warnings.is_empty() {
        out.push_str("\n## Cases without warnings\n\n");
        let mut ids = meta.cases_without_warnings.clone();
        ids.sort();
        for id in ids {
            let _ = writeln!(out, "- {id}: no warnings");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::{Severity, Tool, Warning};

    fn item(id: &str) -> AugmentedWarning {
        AugmentedWarning {
            case_id: id.into(),
            tool: "cppcheck".into(),
            warnings: vec![Warning {
                tool: Tool::Cppcheck,
                check_id: "zerodiv".into(),
                severity: Severity::Error,
                file: format!("{id}.c"),
                line: 5,
                column: None,
                message: "Division by zero.".into(),
                cwe: Some(369),
            }],
            explanation: "Dividing by zero is undefined.".into(),
            fix: "Check the divisor.".into(),
            model_name: "codellama".into(),
            prompt_id: "explain".into(),
            prompt: "p".into(),
            raw_response: "Explanation: Dividing by zero is undefined. Fix: Check the divisor.".into(),
            format_retries: 0,
            created_at: "2024-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn markdown_has_explanation_and_fix_headings() {
        let md = render_report(&[item("dz01")], ReportFormat::Markdown, &ReportMeta::default());
        assert!(md.contains("### Explanation\n\nDividing by zero is undefined."));
        assert!(md.contains("### Fix\n\nCheck the divisor."));
        assert!(md.contains("_Model: codellama"));
    }

    #[test]
    fn empty_report_keeps_metadata() {
        let meta = ReportMeta {
            created_at: "2024-01-01T00:00:00Z".into(),
            model_name: "m".into(),
            ..Default::default()
        };
        let md = render_report(&[], ReportFormat::Markdown, &meta);
        assert!(md.contains("- Generated: 2024-01-01T00:00:00Z"));
        assert!(md.contains("No warnings were explained"));
        assert_eq!(render_report(&[], ReportFormat::Json, &meta), "[]\n");
    }

    #[test]
    fn sections_sorted_by_case_id() {
        let md = render_report(&[item("uv01"), item("bo01")], ReportFormat::Markdown, &ReportMeta::default());
        assert!(md.find("## bo01").unwrap() < md.find("## uv01").unwrap());
        let js: serde_json::Value =
            serde_json::from_str(&render_report(&[item("uv01"), item("bo01")], ReportFormat::Json, &ReportMeta::default()))
                .unwrap();
        assert_eq!(js[0]["case_id"], "bo01");
    }

    #[test]
    fn json_field_order_is_stable() {
        let js = render_report(&[item("a")], ReportFormat::Json, &ReportMeta::default());
        let keys: Vec<usize> = ["\"case_id\"", "\"tool\"", "\"warnings\"", "\"explanation\"", "\"fix\"", "\"model_name\""]
            .iter()
            .map(|k| js.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn notes_cases_without_warnings() {
        let meta = ReportMeta {
            cases_without_warnings: vec!["clean01".into()],
            ..Default::default()
        };
        let md = render_report(&[], ReportFormat::Markdown, &meta);
        assert!(md.contains("- clean01: no warnings"));
    }
}
