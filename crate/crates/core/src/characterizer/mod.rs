//! Per-CWE counts of test cases on which each analyzer reports anything.

mod cache;
mod render;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::analyzers::{
    apply_suppressions, Analyzer, AnalyzerError, SuppressionRule, Tool, Warning, WarningSource,
};
use crate::corpus::{cwe_name, CorpusManifest};

pub use cache::AnalysisCache;
pub use render::{format_count, render_cell, render_table, TableFormat};

/// An integer percentage, or `n/a` when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Percent {
    Value(u32),
    NotApplicable,
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Percent::Value(v) => write!(f, "{v}%"),
            Percent::NotApplicable => f.write_str("n/a"),
        }
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Percent::Value(v) => s.serialize_u32(*v),
            Percent::NotApplicable => s.serialize_str("n/a"),
        }
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u32),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(Percent::Value(v)),
            Raw::S(s) if s == "n/a" => Ok(Percent::NotApplicable),
            Raw::S(s) => Err(serde::de::Error::custom(format!("invalid percent {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("warned count {warned} exceeds total {total}")]
pub struct PctError {
    pub warned: u64,
    pub total: u64,
}

/// `100 * warned / total` rounded half up, or `n/a` for an empty total.
pub fn compute_pct(warned: u64, total: u64) -> Result<Percent, PctError> {
    if warned > total {
        return Err(PctError { warned, total });
    }
    if total == 0 {
        return Ok(Percent::NotApplicable);
    }
    // floor((100w / t) + 1/2) == floor((200w + t) / 2t)
    let (w, t) = (warned as u128, total as u128);
    Ok(Percent::Value(((200 * w + t) / (2 * t)) as u32))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CweStats {
    pub cwe: u32,
    pub name: String,
    pub total_cases: u64,
    pub warned: BTreeMap<Tool, u64>,
    /// Omitted for tools whose row total is zero.
    pub pct: BTreeMap<Tool, Percent>,
}

impl CweStats {
    fn new(cwe: u32, name: String, tools: &[Tool]) -> CweStats {
        CweStats {
            cwe,
            name,
            total_cases: 0,
            warned: tools.iter().map(|&t| (t, 0)).collect(),
            pct: BTreeMap::new(),
        }
    }

    fn finish(&mut self) {
        self.pct = self
            .warned
            .iter()
            .filter_map(|(&t, &w)| match compute_pct(w, self.total_cases) {
                Ok(Percent::Value(v)) => Some((t, Percent::Value(v))),
                _ => None,
            })
            .collect();
    }

    /// Row label, e.g. `CWE369 Divide by Zero`.
    pub fn label(&self) -> String {
        if self.name.is_empty() {
            format!("CWE{}", self.cwe)
        } else {
            format!("CWE{} {}", self.cwe, self.name)
        }
    }
}

/// A case that could not be analyzed by one tool. It counts as not warned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisFailure {
    pub case_id: String,
    pub tool: Tool,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub rows: Vec<CweStats>,
    pub totals: CweStats,
    pub tools: Vec<Tool>,
    pub tool_versions: BTreeMap<Tool, String>,
    pub suppressions_used: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<AnalysisFailure>,
    pub created_at: String,
}

impl CharacterizationReport {
    /// The report with `created_at` blanked, for comparisons.
    pub fn without_timestamp(&self) -> CharacterizationReport {
        CharacterizationReport {
            created_at: String::new(),
            ..self.clone()
        }
    }
}

/// One (case, tool) analysis outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseAnalysis {
    pub case_id: String,
    pub cwe: u32,
    pub tool: Tool,
    /// Unsuppressed parse of the analyzer output, or the failure.
    pub result: Result<Vec<Warning>, String>,
}

#[derive(Debug, Error)]
pub enum CharacterizeError {
    #[error("no analyzer is available ({0})")]
    NoTools(String),
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct CharacterizeOptions {
    pub parallelism: usize,
    pub cache_dir: Option<PathBuf>,
    pub timeout: Duration,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        CharacterizeOptions {
            parallelism: 1,
            cache_dir: None,
            timeout: crate::analyzers::DEFAULT_TIMEOUT,
        }
    }
}

/// Resolves each `(tool, configured executable)` and characterizes `corpus`.
///
/// Unresolvable tools are skipped with a notice as long as one remains.
pub fn characterize(
    corpus: &CorpusManifest,
    tools: &[(Tool, String)],
    suppressions: &[SuppressionRule],
    options: &CharacterizeOptions,
) -> Result<CharacterizationReport, CharacterizeError> {
    let mut sources: Vec<Arc<dyn WarningSource>> = Vec::new();
    let mut notices = Vec::new();
    for (tool, configured) in tools {
        match Analyzer::resolve(*tool, configured, options.timeout) {
            Ok(a) => sources.push(Arc::new(a)),
            Err(e) => notices.push(format!("{tool} skipped: {e}")),
        }
    }
    if sources.is_empty() {
        return Err(CharacterizeError::NoTools(notices.join("; ")));
    }
    let mut report = characterize_with(corpus, &sources, suppressions, options)?;
    report.notices.extend(notices);
    Ok(report)
}

/// Characterizes `corpus` with already-resolved analyzers.
pub fn characterize_with(
    corpus: &CorpusManifest,
    sources: &[Arc<dyn WarningSource>],
    suppressions: &[SuppressionRule],
    options: &CharacterizeOptions,
) -> Result<CharacterizationReport, CharacterizeError> {
    if sources.is_empty() {
        return Err(CharacterizeError::NoTools("none requested".into()));
    }
    let analyses = analyze_corpus(corpus, sources, options)?;
    let versions = sources.iter().map(|s| (s.tool(), s.version())).collect();
    let tools: Vec<Tool> = sources.iter().map(|s| s.tool()).collect();
    Ok(aggregate(corpus, &tools, &analyses, suppressions, versions))
}

/// Runs every tool over every case on a pool of `options.parallelism`
/// workers. Results are sorted by case id, then tool.
pub fn analyze_corpus(
    corpus: &CorpusManifest,
    sources: &[Arc<dyn WarningSource>],
    options: &CharacterizeOptions,
) -> Result<Vec<CaseAnalysis>, CharacterizeError> {
    use rayon::prelude::*;

    if options.parallelism == 0 {
        return Err(CharacterizeError::ZeroParallelism);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| CharacterizeError::Pool(e.to_string()))?;
    let cache = options.cache_dir.as_ref().map(AnalysisCache::new);

    // One job per case; the tools run one after another on the same file
    // because clang-check's fixit mode rewrites it while running.
    let mut results: Vec<CaseAnalysis> = pool.install(|| {
        corpus
            .cases
            .par_iter()
            .flat_map_iter(|case| {
                let path = corpus.case_path(case);
                sources
                    .iter()
                    .map(|source| CaseAnalysis {
                        case_id: case.id.clone(),
                        cwe: case.cwe,
                        tool: source.tool(),
                        result: analyze_cached(source.as_ref(), &path, cache.as_ref()).map_err(|e| e.to_string()),
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    });
    results.sort_by(|a, b| (&a.case_id, a.tool).cmp(&(&b.case_id, b.tool)));
    Ok(results)
}

fn analyze_cached(
    source: &dyn WarningSource,
    path: &std::path::Path,
    cache: Option<&AnalysisCache>,
) -> Result<Vec<Warning>, AnalyzerError> {
    let Some(cache) = cache else {
        return source.analyze(path).map(|r| r.warnings);
    };
    let bytes = std::fs::read(path)?;
    let (version, command) = (source.version(), source.command_for(path));
    let key = cache.key(source.tool(), &version, &bytes, &command);
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let run = source.analyze(path)?;
    if let Err(e) = cache.put(&key, source.tool(), &version, &command, &run.warnings) {
        tracing::warn!(error = %e, "could not write analysis cache entry");
    }
    Ok(run.warnings)
}

/// Folds per-case analyses into a report. Pure: the same inputs always
/// give the same report apart from `created_at`.
pub fn aggregate(
    corpus: &CorpusManifest,
    tools: &[Tool],
    analyses: &[CaseAnalysis],
    suppressions: &[SuppressionRule],
    tool_versions: BTreeMap<Tool, String>,
) -> CharacterizationReport {
    let mut rows: BTreeMap<u32, CweStats> = BTreeMap::new();
    let mut totals = CweStats::new(0, "Total".to_string(), tools);
    for case in &corpus.cases {
        let row = rows
            .entry(case.cwe)
            .or_insert_with(|| CweStats::new(case.cwe, cwe_name(case.cwe).unwrap_or_default().to_string(), tools));
        row.total_cases += 1;
        totals.total_cases += 1;
    }

    let mut failures = Vec::new();
    for a in analyses {
        if !tools.contains(&a.tool) {
            continue;
        }
        match &a.result {
            Ok(warnings) => {
                if apply_suppressions(warnings, suppressions).is_empty() {
                    continue;
                }
                if let Some(row) = rows.get_mut(&a.cwe) {
                    *row.warned.entry(a.tool).or_default() += 1;
                }
                *totals.warned.entry(a.tool).or_default() += 1;
            }
            Err(e) => failures.push(AnalysisFailure {
                case_id: a.case_id.clone(),
                tool: a.tool,
                error: e.clone(),
            }),
        }
    }

    let mut rows: Vec<CweStats> = rows.into_values().collect();
    rows.iter_mut().for_each(CweStats::finish);
    totals.finish();
    let mut sorted_tools = tools.to_vec();
    sorted_tools.sort();
    sorted_tools.dedup();
    CharacterizationReport {
        rows,
        totals,
        tools: sorted_tools,
        tool_versions,
        suppressions_used: suppressions.iter().map(|r| r.check_id_glob.clone()).collect(),
        notices: Vec::new(),
        failures,
        created_at: crate::timestamp::now_rfc3339(),
    }
}
