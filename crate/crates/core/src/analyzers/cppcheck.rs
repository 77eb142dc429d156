use super::{AnalyzerError, Severity, Tool, Warning};

/// Parses cppcheck `--xml-version=2` output.
///
/// Text before the XML declaration (cppcheck's "Checking ..." progress lines
/// on stdout) is ignored. Each `<error>` contributes one warning at its first
/// `<location>`, which is where cppcheck reports the finding; errors without
/// a location (such as the `checkersReport` summary) contribute nothing.
pub fn parse_cppcheck_xml(text: &str) -> Result<Vec<Warning>, AnalyzerError> {
    let start = text
        .find("<?xml")
        .or_else(|| text.find("<results"))
        .ok_or_else(|| AnalyzerError::Xml("no <results> document in output".to_string()))?;
    let mut doc_text = &text[start..];
    if let Some(end) = doc_text.find("</results>") {
        doc_text = &doc_text[..end + "</results>".len()];
    }
    let doc = roxmltree::Document::parse(doc_text).map_err(|e| AnalyzerError::Xml(e.to_string()))?;

    let mut warnings = Vec::new();
    for error in doc.descendants().filter(|n| n.has_tag_name("error")) {
        let Some(location) = error.children().find(|n| n.has_tag_name("location")) else {
            continue;
        };
        let check_id = error.attribute("id").unwrap_or_default();
        if check_id.is_empty() {
            return Err(AnalyzerError::Xml("<error> element without id".to_string()));
        }
        let line = location
            .attribute("line")
            .and_then(|l| l.parse::<u32>().ok())
            .unwrap_or(1)
            .max(1);
        warnings.push(Warning {
            tool: Tool::Cppcheck,
            check_id: check_id.to_string(),
            severity: map_severity(error.attribute("severity").unwrap_or_default()),
            file: location.attribute("file").unwrap_or_default().to_string(),
            line,
            column: location
                .attribute("column")
                .and_then(|c| c.parse::<u32>().ok())
                .filter(|&c| c >= 1),
            message: error.attribute("msg").unwrap_or_default().to_string(),
            cwe: error
                .attribute("cwe")
                .and_then(|c| c.parse::<u32>().ok())
                .filter(|&c| c > 0),
        });
    }
    Ok(warnings)
}

fn map_severity(s: &str) -> Severity {
    match s {
        "error" => Severity::Error,
        "warning" => Severity::Warning,
        "style" => Severity::Style,
        "performance" => Severity::Performance,
        "portability" => Severity::Portability,
        // "information", "debug", "none"
        _ => Severity::Information,
    }
}
