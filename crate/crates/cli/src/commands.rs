use std::io::Write;
use std::path::{Path, PathBuf};

use warnforge::analyzers::{analyze_filtered, detect_tools, sort_warnings};
use warnforge::augmenter::{
    self, compile_smoke_check, render_report, request_fixed_code, AugmentError, FixStatus, FixValidation, ReportMeta,
};
use warnforge::characterizer::{self, render_table, CharacterizeError, CharacterizeOptions};
use warnforge::config::ConfigSource;
use warnforge::corpus::{load_manifest, save_manifest, write_case, CorpusError, CorpusManifest};
use warnforge::extractor::{extract_case, Allowlist};
use warnforge::fsutil::atomic_write;
use warnforge::{
    Analyzer, AugmentedWarning, CacheMode, Config, ExtractionConfig, Gateway, PromptTemplate, SuppressionRule,
    TestCase, Tool, Warning,
};

use crate::args::{AnalyzeArgs, AugmentArgs, CharacterizeArgs, Cli, ExtractArgs, ValidateFixArgs};
use crate::exit::{CmdResult, Failure, Status};

/// Used for `validate-fix --compile` when the config names no compiler.
const DEFAULT_COMPILER: &[&str] = &["cc", "-fsyntax-only"];

/// Resolved configuration shared by every subcommand.
pub struct Context {
    pub config: Config,
    pub source: ConfigSource,
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Context, Failure> {
        let (mut config, source) = Config::discover(cli.config.as_deref())?;
        let o = &cli.overrides;
        if let Some(mode) = o.cache_mode {
            config.cache.mode = mode;
        }
        if let Some(dir) = &o.cache_dir {
            config.cache.dir = dir.clone();
        }
        if let Some(model) = &o.model {
            config.llm.model = Some(model.clone());
        }
        if let Some(url) = &o.base_url {
            config.llm.base_url = Some(url.clone());
        }
        if let Some(p) = &o.cppcheck {
            config.tools.cppcheck_path = p.clone();
        }
        if let Some(p) = &o.clang_check {
            config.tools.clang_check_path = p.clone();
        }
        if o.no_suppressions {
            config.suppressions.clear();
        }
        config.validate()?;
        if let Some(var) = &config.llm.api_key_env {
            if std::env::var_os(var).is_none() {
                tracing::debug!(%var, "API key variable is not set");
            }
        }
        Ok(Context { config, source })
    }

    fn rules(&self) -> Vec<SuppressionRule> {
        self.config.suppression_rules()
    }

    fn analyzer(&self, tool: Tool) -> Result<Analyzer, Failure> {
        Ok(Analyzer::resolve(tool, self.config.tool_path(tool), self.config.analyzer_timeout())?)
    }

    fn gateway(&self) -> Result<Gateway, Failure> {
        let endpoint = self.config.endpoint()?;
        let cache_dir = Some(self.config.cache.dir.clone());
        let gateway = Gateway::new(endpoint, cache_dir, self.config.cache.mode)?;
        Ok(gateway.with_max_in_flight(self.config.llm.max_in_flight))
    }
}

fn load_case(path: &Path) -> Result<TestCase, Failure> {
    if !path.is_file() {
        return Err(Failure::usage(format!("input file {} does not exist", path.display())));
    }
    TestCase::from_file(path).map_err(|e| Failure::usage(e.to_string()))
}

fn analyze_case(analyzer: &Analyzer, path: &Path, rules: &[SuppressionRule]) -> Result<Vec<Warning>, Failure> {
    let (_, mut kept) = analyze_filtered(analyzer, path, rules)?;
    sort_warnings(&mut kept);
    Ok(kept)
}

/// Writes `text` to `out` atomically, or to stdout when `out` is `None`.
fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => atomic_write(path, text.as_bytes())
            .map_err(|e| Failure::env(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::env(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn analyze(ctx: &Context, args: &AnalyzeArgs) -> CmdResult {
    for path in &args.paths {
        if !path.is_file() {
            return Err(Failure::usage(format!("input file {} does not exist", path.display())));
        }
    }
    let analyzer = ctx.analyzer(args.tool)?;
    let rules = ctx.rules();
    let mut all = Vec::new();
    for path in &args.paths {
        all.extend(analyze_case(&analyzer, path, &rules)?);
    }
    sort_warnings(&mut all);
    let text = if args.json {
        to_json(&all)
    } else {
        all.iter().map(|w| format!("{w}\n")).collect()
    };
    emit(&text, None)?;
    Ok(Status::Success)
}

fn load_template(spec: Option<&str>) -> Result<PromptTemplate, Failure> {
    let Some(spec) = spec else {
        return Ok(PromptTemplate::default());
    };
    if let Some(t) = PromptTemplate::builtin(spec) {
        return Ok(t);
    }
    PromptTemplate::from_file(Path::new(spec)).map_err(|e| Failure::usage(e.to_string()))
}

fn augment_failure(e: AugmentError) -> Failure {
    match e {
        AugmentError::Gateway(g) => Failure::env(g),
        AugmentError::Template(t) => Failure::usage(t.to_string()),
        AugmentError::Format { case_id, raw_responses, source } => {
            let last = raw_responses.last().map(String::as_str).unwrap_or("");
            Failure::failed(format!(
                "model ignored the response format twice for case {case_id} ({source}); last reply: {}",
                last.trim()
            ))
        }
        other => Failure::failed(other.to_string()),
    }
}

pub fn augment(ctx: &Context, args: &AugmentArgs) -> CmdResult {
    let cases = args.paths.iter().map(|p| load_case(p)).collect::<Result<Vec<_>, _>>()?;
    let template = load_template(args.template.as_deref())?;
    let analyzer = ctx.analyzer(args.tool)?;
    let gateway = ctx.gateway()?;
    let rules = ctx.rules();

    let mut items: Vec<AugmentedWarning> = Vec::new();
    let mut quiet_cases = Vec::new();
    let mut validations: Vec<(String, FixValidation)> = Vec::new();
    for (case, path) in cases.iter().zip(&args.paths) {
        let warnings = analyze_case(&analyzer, path, &rules)?;
        if warnings.is_empty() {
            tracing::info!(case = %case.id, "no warnings");
            quiet_cases.push(case.id.clone());
            continue;
        }
        let groups: Vec<(TestCase, Vec<Warning>)> = if args.per_warning {
            warnings
                .iter()
                .map(|w| {
                    let mut c = case.clone();
                    c.id = format!("{}:{}:{}", case.id, w.check_id, w.line);
                    (c, vec![w.clone()])
                })
                .collect()
        } else {
            vec![(case.clone(), warnings.clone())]
        };
        for (sub_case, ws) in groups {
            let item = augmenter::augment(&sub_case, &ws, &gateway, &template).map_err(augment_failure)?;
            if let Some(dir) = &args.fixed_out {
                let v = fixed_file(&sub_case, case, &item, &ws, &gateway, &analyzer, &rules, dir)?;
                validations.push((sub_case.id.clone(), v));
            }
            items.push(item);
        }
    }

    let meta = ReportMeta {
        created_at: warnforge::timestamp::now_rfc3339(),
        model_name: gateway.model_name().to_string(),
        tool: args.tool.to_string(),
        cases_without_warnings: quiet_cases,
    };
    emit(&render_report(&items, args.format, &meta), args.out.as_deref())?;

    let mut status = Status::Success;
    for (id, v) in &validations {
        eprintln!("fix {id}: {}", v.status);
        if v.status != FixStatus::Eliminated {
            status = Status::Failures;
        }
    }
    Ok(status)
}

/// Requests, writes and validates the full fixed file for one augmented item.
#[allow(clippy::too_many_arguments)]
fn fixed_file(
    sub_case: &TestCase,
    case: &TestCase,
    item: &AugmentedWarning,
    warnings: &[Warning],
    gateway: &Gateway,
    analyzer: &Analyzer,
    rules: &[SuppressionRule],
    dir: &Path,
) -> Result<FixValidation, Failure> {
    let targets: Vec<String> = warnings.iter().map(|w| w.check_id.clone()).collect();
    let fixed = match request_fixed_code(sub_case, item, gateway, &PromptTemplate::fixed_code()) {
        Ok(code) if code.ends_with('\n') => code,
        Ok(code) => code + "\n",
        Err(AugmentError::Gateway(g)) => return Err(Failure::env(g)),
        Err(e) => {
            tracing::warn!(case = %sub_case.id, "no fixed file: {e}");
            return Ok(FixValidation::not_attempted(targets));
        }
    };
    std::fs::create_dir_all(dir).map_err(|e| Failure::env(format!("cannot create {}: {e}", dir.display())))?;
    let name = sub_case.id.replace(':', "_");
    let out = dir.join(format!("{name}.{}", case.language.extension()));
    atomic_write(&out, fixed.as_bytes()).map_err(|e| Failure::env(format!("cannot write {}: {e}", out.display())))?;
    Ok(augmenter::validate_fix(case, &fixed, analyzer, rules, &targets))
}

/// Takes id, CWE and name from a `manifest.json` beside `path` that lists it.
fn manifest_metadata(case: &mut TestCase, path: &Path) {
    let Some(dir) = path.parent() else { return };
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return;
    }
    let Ok(manifest) = load_manifest(&manifest_path) else {
        tracing::debug!(path = %manifest_path.display(), "ignoring unreadable manifest");
        return;
    };
    let Ok(target) = path.canonicalize() else { return };
    let listed = manifest
        .cases
        .iter()
        .find(|c| manifest.case_path(c).canonicalize().ok().as_deref() == Some(target.as_path()));
    if let Some(listed) = listed {
        case.id = listed.id.clone();
        case.cwe = listed.cwe;
        case.name = listed.name.clone();
    }
}

pub fn extract(ctx: &Context, args: &ExtractArgs) -> CmdResult {
    let mut case = load_case(&args.path)?;
    manifest_metadata(&mut case, &args.path);
    if let Some(cwe) = args.cwe {
        case.cwe = cwe;
    }
    let allowlist = match &ctx.config.allowlist_path {
        Some(p) => Allowlist::from_file(p)
            .map_err(|e| Failure::usage(format!("cannot read allowlist {}: {e}", p.display())))?,
        None => Allowlist::builtin(),
    };
    let analyzer = ctx.analyzer(args.tool)?;
    let rules = ctx.rules();
    let warnings = analyze_case(&analyzer, &args.path, &rules)?;
    if warnings.is_empty() {
        return Err(Failure::failed(format!(
            "{} reports no warnings on {}; nothing to extract",
            args.tool,
            args.path.display()
        )));
    }
    let target = match &args.check_id {
        Some(id) => warnings.iter().find(|w| &w.check_id == id).ok_or_else(|| {
            let mut ids: Vec<&str> = warnings.iter().map(|w| w.check_id.as_str()).collect();
            ids.dedup();
            Failure::failed(format!("check id {id} is not reported on {}; reported: {}", args.path.display(), ids.join(", ")))
        })?,
        None => {
            let first = &warnings[0];
            eprintln!("notice: no --check-id given; targeting the first warning: {first}");
            first
        }
    };
    let gateway = ctx.gateway()?;

    let mut config = ExtractionConfig::new(args.tool, target.check_id.clone());
    config.max_attempts = args.max_attempts;
    config.obfuscate = !args.no_obfuscate;
    config.strip_comments = !args.keep_comments;
    config.suppressions = rules;
    config.allowlist = allowlist;

    let result = extract_case(&case, target, &gateway, &analyzer, &config).map_err(Failure::env)?;
    if args.json {
        emit(&to_json(&result), None)?;
    }

    if let Some(reason) = &result.abort_reason {
        return Err(Failure::env(format!("extraction aborted: {reason}")));
    }
    let Some(final_case) = result.final_case.as_ref().filter(|_| result.is_validated()) else {
        let last = result
            .attempts
            .last()
            .and_then(|a| a.failure_reason.clone())
            .unwrap_or_default();
        eprintln!("extraction failed after {} attempt(s): {last}", result.attempts.len());
        return Ok(Status::Failures);
    };

    let written = store_extracted(final_case, &result.sidecar(), &args.out_dir)?;
    if !args.json {
        println!("{}", written.display());
    }
    eprintln!("validated in {} attempt(s)", result.attempts.len());
    Ok(Status::Success)
}

/// Writes the case, its sidecar and an updated manifest into `out_dir`.
fn store_extracted(case: &TestCase, sidecar: &serde_json::Value, out_dir: &Path) -> Result<PathBuf, Failure> {
    let io = |e: CorpusError| Failure::env(e.to_string());
    std::fs::create_dir_all(out_dir).map_err(|e| Failure::env(format!("cannot create {}: {e}", out_dir.display())))?;
    let written = write_case(case, out_dir).map_err(io)?;
    let sidecar_path = out_dir.join(format!("{}.json", case.id));
    atomic_write(&sidecar_path, to_json(sidecar).as_bytes())
        .map_err(|e| Failure::env(format!("cannot write {}: {e}", sidecar_path.display())))?;

    if case.cwe == 0 {
        eprintln!(
            "notice: no CWE known for {}; {} not updated (pass --cwe to record it)",
            case.id,
            out_dir.join("manifest.json").display()
        );
        return Ok(written);
    }
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest = if manifest_path.is_file() {
        load_manifest(&manifest_path).map_err(|e| Failure::usage(e.to_string()))?
    } else {
        CorpusManifest::new(".")
    };
    manifest.upsert_case(case.clone());
    manifest.cases.sort_by(|a, b| a.id.cmp(&b.id));
    save_manifest(&manifest, &manifest_path).map_err(io)?;
    Ok(written)
}

pub fn characterize(ctx: &Context, args: &CharacterizeArgs) -> CmdResult {
    let corpus = load_manifest(&args.manifest).map_err(|e| match e {
        CorpusError::Io { .. } => Failure::usage(e.to_string()),
        other => Failure::usage(other.to_string()),
    })?;
    let mut tools: Vec<Tool> = Vec::new();
    for t in &args.tools {
        if !tools.contains(t) {
            tools.push(*t);
        }
    }
    let configured: Vec<(Tool, String)> = tools.iter().map(|t| (*t, ctx.config.tool_path(*t).to_string())).collect();
    let options = CharacterizeOptions {
        parallelism: args.parallelism.map_or(ctx.config.parallelism, |p| p as usize),
        cache_dir: ctx.config.cache.analysis_dir.clone(),
        timeout: ctx.config.analyzer_timeout(),
    };
    let report = characterizer::characterize(&corpus, &configured, &ctx.rules(), &options).map_err(|e| match e {
        CharacterizeError::NoTools(_) => Failure::env(e),
        CharacterizeError::ZeroParallelism => Failure::usage(e.to_string()),
        CharacterizeError::Pool(_) => Failure::env(e),
    })?;
    for notice in &report.notices {
        eprintln!("notice: {notice}");
    }
    for f in &report.failures {
        eprintln!("warning: {} could not analyze {}: {}", f.tool, f.case_id, f.error);
    }
    emit(&render_table(&report, args.format), args.out.as_deref())?;
    Ok(Status::Success)
}

pub fn validate_fix(ctx: &Context, args: &ValidateFixArgs) -> CmdResult {
    let original = load_case(&args.original)?;
    if !args.fixed.is_file() {
        return Err(Failure::usage(format!("fixed file {} does not exist", args.fixed.display())));
    }
    let fixed = std::fs::read_to_string(&args.fixed)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.fixed.display())))?;
    let analyzer = match ctx.analyzer(args.tool) {
        Ok(a) => a,
        Err(f) => {
            let v = FixValidation::analysis_failed(args.check_ids.clone(), Some(fixed), f.message);
            print_validation(&v, args.json)?;
            return Ok(Status::Environment);
        }
    };
    let mut v = augmenter::validate_fix(&original, &fixed, &analyzer, &ctx.rules(), &args.check_ids);
    if args.compile && v.status != FixStatus::AnalysisFailed {
        let compiler: Vec<String> = match &ctx.config.compiler {
            Some(c) => c.clone(),
            None => DEFAULT_COMPILER.iter().map(|s| s.to_string()).collect(),
        };
        v.compiles = match compile_smoke_check(&compiler, &fixed, original.language) {
            Ok(ok) => Some(ok),
            Err(e) => {
                tracing::warn!("compile check could not run: {e}");
                None
            }
        };
    }
    print_validation(&v, args.json)?;
    Ok(match v.status {
        FixStatus::Eliminated => Status::Success,
        FixStatus::Persists => Status::Failures,
        _ => Status::Environment,
    })
}

fn print_validation(v: &FixValidation, json: bool) -> Result<(), Failure> {
    if json {
        return emit(&to_json(v), None);
    }
    let mut out = format!("status: {}\n", v.status);
    out.push_str(&format!("targets: {}\n", v.target_check_ids.join(", ")));
    for w in &v.warnings_after {
        out.push_str(&format!("remaining: {}\n", w.prompt_line()));
    }
    if let Some(c) = v.compiles {
        out.push_str(&format!("compiles: {c}\n"));
    }
    if let Some(e) = &v.error {
        out.push_str(&format!("error: {e}\n"));
    }
    emit(&out, None)
}

pub fn doctor(ctx: &Context) -> CmdResult {
    let mut out = String::new();
    match &ctx.source {
        ConfigSource::File(p) => out.push_str(&format!("config: {}\n", p.display())),
        ConfigSource::Defaults => out.push_str("config: none found, using built-in defaults\n"),
    }
    let configured: Vec<(Tool, String)> = [Tool::Cppcheck, Tool::ClangCheck]
        .into_iter()
        .map(|t| (t, ctx.config.tool_path(t).to_string()))
        .collect();
    let report = detect_tools(&configured);
    let mut ok = report.all_found();
    for t in &report.tools {
        match (&t.path, &t.version) {
            (Some(path), version) => out.push_str(&format!(
                "{}: found at {} ({})\n",
                t.tool,
                path.display(),
                version.as_deref().unwrap_or("unknown version")
            )),
            (None, _) => out.push_str(&format!("{}: MISSING (configured as \"{}\")\n", t.tool, t.configured)),
        }
    }
    if let Some(advice) = &report.advice {
        out.push_str(&format!("advice: {advice}\n"));
    }

    let llm = &ctx.config.llm;
    match (&llm.base_url, &llm.model) {
        (None, _) => out.push_str("endpoint: not configured (only analyze, characterize and validate-fix are usable)\n"),
        (Some(url), _) => match ctx.gateway().and_then(|g| g.probe().map_err(Failure::env)) {
            Ok(()) => out.push_str(&format!("endpoint: {url} reachable\n")),
            Err(f) => {
                ok = false;
                out.push_str(&format!("endpoint: {url} UNAVAILABLE ({})\n", f.message));
            }
        },
    }
    out.push_str(&format!(
        "cache: {} ({})\n",
        ctx.config.cache.dir.display(),
        match ctx.config.cache.mode {
            CacheMode::Record => "record",
            CacheMode::Replay => "replay",
            CacheMode::Off => "off",
        }
    ));
    emit(&out, None)?;
    Ok(if ok { Status::Success } else { Status::Environment })
}
