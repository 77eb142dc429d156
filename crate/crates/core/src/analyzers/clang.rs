use std::sync::OnceLock;

use regex::Regex;

use super::{Severity, Tool, Warning};

/// Result of scanning clang-check output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClangParse {
    pub warnings: Vec<Warning>,
    /// Lines that did not look like a located diagnostic (source excerpts,
    /// caret lines, "N warnings generated.", unlocated notes).
    pub ignored_lines: usize,
}

fn diagnostic_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(?P<path>.+?):(?P<line>\d+):(?P<col>\d+): (?P<sev>fatal error|error|warning|note): (?P<msg>.*?)(?: \[(?P<tag>[^\[\]]+)\])?$",
        )
        .unwrap()
    })
}

/// Scans clang text diagnostics of the form
/// `<path>:<line>:<col>: warning|error|note: <message> [<tag>]`.
///
/// The check id is the trailing bracketed tag when present, otherwise
/// [`clang_slug`] of the message.
pub fn parse_clang_diagnostics(text: &str) -> ClangParse {
    let mut parse = ClangParse::default();
    for raw in text.lines() {
        let line = raw.trim_end_matches('\r');
        let Some(caps) = diagnostic_re().captures(line) else {
            if !line.trim().is_empty() {
                parse.ignored_lines += 1;
            }
            continue;
        };
        let Ok(line_no) = caps["line"].parse::<u32>() else {
            parse.ignored_lines += 1;
            continue;
        };
        if line_no == 0 {
            parse.ignored_lines += 1;
            continue;
        }
        let message = caps["msg"].trim().to_string();
        let check_id = match caps.name("tag") {
            Some(tag) => tag.as_str().to_string(),
            None => clang_slug(&message),
        };
        let severity = match &caps["sev"] {
            "warning" => Severity::Warning,
            "note" => Severity::Note,
            _ => Severity::Error,
        };
        parse.warnings.push(Warning {
            tool: Tool::ClangCheck,
            check_id,
            severity,
            file: caps["path"].to_string(),
            line: line_no,
            column: caps["col"].parse::<u32>().ok().filter(|&c| c >= 1),
            message,
            cwe: None,
        });
    }
    parse
}

/// Lowercase hyphenated slug of the first six words of `message`.
///
/// Each whitespace-separated word keeps only ASCII letters and digits; words
/// that become empty are dropped. An all-punctuation message yields
/// `"clang-diagnostic"`.
pub fn clang_slug(message: &str) -> String {
    let words: Vec<String> = message
        .split_whitespace()
        .take(6)
        .map(|w| {
            w.chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_ascii_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect();
    if words.is_empty() {
        "clang-diagnostic".to_string()
    } else {
        words.join("-")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untagged_warning_gets_slug() {
        let p = parse_clang_diagnostics("bo01.c:16:5: warning: 1st function call argument is an uninitialized value\n");
        assert_eq!(p.warnings.len(), 1);
        let w = &p.warnings[0];
        assert_eq!(w.check_id, "1st-function-call-argument-is-an");
        assert_eq!(w.severity, Severity::Warning);
        assert_eq!((w.file.as_str(), w.line, w.column), ("bo01.c", 16, Some(5)));
        assert_eq!(w.message, "1st function call argument is an uninitialized value");
    }

    #[test]
    fn unlocated_note_is_ignored() {
        let p = parse_clang_diagnostics("note: expanded from macro\n");
        assert!(p.warnings.is_empty());
        assert_eq!(p.ignored_lines, 1);
    }

    #[test]
    fn bracket_tag_is_check_id() {
        let p = parse_clang_diagnostics("a.c:3:1: error: expected ';' [parse-error]");
        assert_eq!(p.warnings[0].check_id, "parse-error");
        assert_eq!(p.warnings[0].severity, Severity::Error);
        assert_eq!(p.warnings[0].message, "expected ';'");
    }

    #[test]
    fn real_analyzer_output_block() {
        let out = "/tmp/cc/dz01.cpp:5:22: warning: Division by zero [core.DivideZero]\n    int result = (100/0);\n                  ~~~^~\n1 warning generated.\n";
        let p = parse_clang_diagnostics(out);
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].check_id, "core.DivideZero");
        assert_eq!(p.warnings[0].file, "/tmp/cc/dz01.cpp");
        assert_eq!(p.ignored_lines, 3);
    }

    #[test]
    fn fatal_errors_and_notes() {
        let out = "x.c:1:10: fatal error: 'nope.h' file not found\nx.c:4:3: note: Assuming 'p' is null\r\n";
        let p = parse_clang_diagnostics(out);
        assert_eq!(p.warnings[0].severity, Severity::Error);
        assert_eq!(p.warnings[0].check_id, "nopeh-file-not-found");
        assert_eq!(p.warnings[1].severity, Severity::Note);
        assert_eq!(p.warnings[1].message, "Assuming 'p' is null");
    }

    #[test]
    fn windows_style_paths() {
        let p = parse_clang_diagnostics(r"C:\src\a.c:2:7: warning: unused variable 'x' [-Wunused-variable]");
        assert_eq!(p.warnings[0].file, r"C:\src\a.c");
        assert_eq!(p.warnings[0].check_id, "-Wunused-variable");
    }

    #[test]
    fn slug_edge_cases() {
        assert_eq!(clang_slug("Value stored to 'x' is never read"), "value-stored-to-x-is-never");
        assert_eq!(clang_slug("!!! ???"), "clang-diagnostic");
    }
}
