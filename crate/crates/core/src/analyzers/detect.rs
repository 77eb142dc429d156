use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use super::{process, Tool};

/// Versioned suffixes probed when the bare default name is not on PATH
/// (Debian/Ubuntu install clang tools as `clang-check-14` and so on).
const VERSION_SUFFIXES: std::ops::RangeInclusive<u32> = 6..=30;

pub(crate) fn resolve_executable(tool: Tool, configured: &str) -> Option<PathBuf> {
    if configured.is_empty() {
        return None;
    }
    let looks_like_path = configured.contains(std::path::MAIN_SEPARATOR) || configured.contains('/');
    if looks_like_path {
        let p = Path::new(configured);
        return is_executable(p).then(|| p.to_path_buf());
    }
    if let Ok(p) = which::which(configured) {
        return Some(p);
    }
    if configured == tool.name() {
        for n in VERSION_SUFFIXES.rev() {
            if let Ok(p) = which::which(format!("{configured}-{n}")) {
                return Some(p);
            }
        }
    }
    None
}

fn is_executable(p: &Path) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        p.metadata()
            .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
            .unwrap_or(false)
    }
    #[cfg(not(unix))]
    {
        p.is_file()
    }
}

/// First line of `<exe> --version` that mentions a version.
pub(crate) fn probe_version(exe: &Path) -> Option<String> {
    let argv = vec![exe.to_string_lossy().into_owned(), "--version".to_string()];
    let out = process::run_with_timeout(&argv, Duration::from_secs(15)).ok()?;
    let text = format!("{}{}", out.stdout, out.stderr);
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    lines
        .iter()
        .find(|l| l.to_ascii_lowercase().contains("version") || l.starts_with("Cppcheck"))
        .or_else(|| lines.first())
        .map(|l| l.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToolAvailability {
    pub tool: Tool,
    pub configured: String,
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToolReport {
    pub tools: Vec<ToolAvailability>,
    /// Set when at least one tool is missing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advice: Option<String>,
}

impl ToolReport {
    pub fn all_found(&self) -> bool {
        self.tools.iter().all(|t| t.found)
    }

    pub fn missing(&self) -> impl Iterator<Item = &ToolAvailability> {
        self.tools.iter().filter(|t| !t.found)
    }
}

/// Probes each configured analyzer. Absence is reported, never an error.
pub fn detect_tools(configured: &[(Tool, String)]) -> ToolReport {
    let tools: Vec<ToolAvailability> = configured
        .iter()
        .map(|(tool, path)| match resolve_executable(*tool, path) {
            Some(exe) => ToolAvailability {
                tool: *tool,
                configured: path.clone(),
                found: true,
                version: probe_version(&exe),
                path: Some(exe),
            },
            None => ToolAvailability {
                tool: *tool,
                configured: path.clone(),
                found: false,
                path: None,
                version: None,
            },
        })
        .collect();
    let missing: Vec<&str> = tools.iter().filter(|t| !t.found).map(|t| t.tool.name()).collect();
    let advice = (!missing.is_empty()).then(|| {
        format!(
            "install {} or point tools.{{cppcheck_path,clang_check_path}} in the config file at the executable",
            missing.join(" and ")
        )
    });
    ToolReport { tools, advice }
}
