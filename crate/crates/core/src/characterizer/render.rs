use std::str::FromStr;

use super::{compute_pct, CharacterizationReport, CweStats, Percent};
use crate::analyzers::Tool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Markdown,
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(format!("unknown table format \"{other}\" (expected markdown, csv or json)")),
        }
    }
}

/// `3876` becomes `3,876`.
pub fn format_count(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// A `<count> (<pct>)` cell, e.g. `3,876 (49%)` or `0 (n/a)`.
pub fn render_cell(warned: u64, pct: Percent, separators: bool) -> String {
    let count = if separators { format_count(warned) } else { warned.to_string() };
    format!("{count} ({pct})")
}

fn row_cells(row: &CweStats, tools: &[Tool], separators: bool) -> Vec<String> {
    let mut cells = vec![row.label()];
    for tool in tools {
        let warned = row.warned.get(tool).copied().unwrap_or(0);
        let pct = compute_pct(warned, row.total_cases).unwrap_or(Percent::NotApplicable);
        cells.push(render_cell(warned, pct, separators));
    }
    cells
}

/// Renders the report as a table with one row per CWE and a final total
/// row. Thousands separators appear in markdown only.
pub fn render_table(report: &CharacterizationReport, format: TableFormat) -> String {
    let tools = &report.tools;
    let mut header = vec!["CWE".to_string()];
    header.extend(tools.iter().map(|t| t.name().to_string()));
    let totals = CweStats {
        name: String::new(),
        ..report.totals.clone()
    };
    match format {
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        TableFormat::Markdown => {
            let mut out = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
            for row in &report.rows {
                out.push_str(&format!("| {} |\n", row_cells(row, tools, true).join(" | ")));
            }
            let mut last = row_cells(&totals, tools, true);
            last[0] = "Total".to_string();
            out.push_str(&format!("| {} |\n", last.join(" | ")));
            out
        }
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).expect("in-memory write");
            for row in &report.rows {
                w.write_record(row_cells(row, tools, false)).expect("in-memory write");
            }
            let mut last = row_cells(&totals, tools, false);
            last[0] = "Total".to_string();
            w.write_record(&last).expect("in-memory write");
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
    }
}
