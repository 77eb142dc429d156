//! The JSON configuration file, `warnforge.json` by default.
//!
//! Every field is optional. Relative paths are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::{SuppressionRule, Tool};
use crate::gateway::{CacheMode, ModelEndpoint};

pub const DEFAULT_CONFIG_FILE: &str = "warnforge.json";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("no model endpoint configured: set {0} in the config file")]
    MissingLlm(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolsConfig {
    pub cppcheck_path: String,
    pub clang_check_path: String,
    /// Per-file analyzer timeout.
    pub timeout_s: u64,
}

impl Default for ToolsConfig {
    fn default() -> Self {
        ToolsConfig {
            cppcheck_path: Tool::Cppcheck.name().to_string(),
            clang_check_path: Tool::ClangCheck.name().to_string(),
            timeout_s: crate::analyzers::DEFAULT_TIMEOUT.as_secs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub timeout_s: u64,
    pub max_in_flight: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            base_url: None,
            model: None,
            api_key_env: None,
            temperature: 0.0,
            max_tokens: Some(512),
            timeout_s: 120,
            max_in_flight: crate::gateway::DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub dir: PathBuf,
    pub mode: CacheMode,
    /// Where per-file analyzer results are kept; unset disables it.
    pub analysis_dir: Option<PathBuf>,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            dir: PathBuf::from(".warnforge/llm-cache"),
            mode: CacheMode::Record,
            analysis_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tools: ToolsConfig,
    pub llm: LlmConfig,
    pub cache: CacheConfig,
    /// Check-id globs removed from every analysis.
    pub suppressions: Vec<String>,
    pub allowlist_path: Option<PathBuf>,
    pub parallelism: usize,
    pub corpus_root: Option<PathBuf>,
    /// Compiler argv prefix for the optional compile check of fixes.
    pub compiler: Option<Vec<String>>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tools: ToolsConfig::default(),
            llm: LlmConfig::default(),
            cache: CacheConfig::default(),
            suppressions: crate::analyzers::default_suppressions()
                .into_iter()
                .map(|r| r.check_id_glob)
                .collect(),
            allowlist_path: None,
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            corpus_root: None,
            compiler: None,
        }
    }
}

/// Where the active configuration came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigSource {
    File(PathBuf),
    Defaults,
}

impl Config {
    /// Reads and validates `path`, resolving relative paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Config = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    /// Loads `explicit` if given, else `./warnforge.json` if it exists,
    /// else the built-in defaults.
    pub fn discover(explicit: Option<&Path>) -> Result<(Config, ConfigSource), ConfigError> {
        if let Some(path) = explicit {
            return Ok((Config::load(path)?, ConfigSource::File(path.to_path_buf())));
        }
        let default = Path::new(DEFAULT_CONFIG_FILE);
        if default.is_file() {
            return Ok((Config::load(default)?, ConfigSource::File(default.to_path_buf())));
        }
        Ok((Config::default(), ConfigSource::Defaults))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.cache.dir);
        self.cache.analysis_dir.as_mut().map(fix);
        self.allowlist_path.as_mut().map(fix);
        self.corpus_root.as_mut().map(fix);
        // executables given as relative paths (not bare names) are relative too
        for exe in [&mut self.tools.cppcheck_path, &mut self.tools.clang_check_path] {
            if exe.contains('/') && Path::new(exe.as_str()).is_relative() {
                *exe = base.join(&*exe).to_string_lossy().into_owned();
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be at least 1".into()));
        }
        if self.llm.temperature < 0.0 || !self.llm.temperature.is_finite() {
            return Err(ConfigError::Invalid("llm.temperature must be a non-negative number".into()));
        }
        if self.llm.timeout_s == 0 || self.tools.timeout_s == 0 {
            return Err(ConfigError::Invalid("timeouts must be positive".into()));
        }
        if self.llm.max_in_flight == 0 {
            return Err(ConfigError::Invalid("llm.max_in_flight must be at least 1".into()));
        }
        if let Some(glob) = self.suppressions.iter().find(|g| g.is_empty() || glob::Pattern::new(g).is_err()) {
            return Err(ConfigError::Invalid(format!("bad suppression glob \"{glob}\"")));
        }
        Ok(())
    }

    pub fn suppression_rules(&self) -> Vec<SuppressionRule> {
        self.suppressions
            .iter()
            .map(|g| SuppressionRule::new(g.clone(), "configured"))
            .collect()
    }

    pub fn tool_path(&self, tool: Tool) -> &str {
        match tool {
            Tool::Cppcheck => &self.tools.cppcheck_path,
            Tool::ClangCheck => &self.tools.clang_check_path,
        }
    }

    pub fn analyzer_timeout(&self) -> std::time::Duration {
        std::time::Duration::from_secs(self.tools.timeout_s)
    }

    /// The model endpoint. A model name is always required because it is
    /// part of every cache key; a base URL only outside replay mode.
    pub fn endpoint(&self) -> Result<ModelEndpoint, ConfigError> {
        let model = self.llm.model.clone().ok_or(ConfigError::MissingLlm("llm.model"))?;
        let base_url = match (&self.llm.base_url, self.cache.mode) {
            (Some(url), _) => url.clone(),
            (None, CacheMode::Replay) => String::new(),
            (None, _) => return Err(ConfigError::MissingLlm("llm.base_url")),
        };
        let mut endpoint = ModelEndpoint::new(base_url, model);
        endpoint.api_key_env = self.llm.api_key_env.clone();
        endpoint.temperature = self.llm.temperature;
        endpoint.max_tokens = self.llm.max_tokens;
        endpoint.timeout_s = self.llm.timeout_s;
        Ok(endpoint)
    }
}
