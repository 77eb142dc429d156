use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyzers::{Tool, Warning};
use crate::fsutil::atomic_write;

/// On-disk store of per-file analyzer results, one JSON file per key.
#[derive(Debug, Clone)]
pub struct AnalysisCache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    tool: Tool,
    tool_version: String,
    command: Vec<String>,
    warnings: Vec<Warning>,
}

impl AnalysisCache {
    pub fn new(dir: impl Into<PathBuf>) -> AnalysisCache {
        AnalysisCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Digest of tool, version, file contents and full command line.
    pub fn key(&self, tool: Tool, version: &str, contents: &[u8], command: &[String]) -> String {
        let mut h = Sha256::new();
        h.update(tool.name().as_bytes());
        h.update([0]);
        h.update(version.as_bytes());
        h.update([0]);
        h.update(Sha256::digest(contents));
        for arg in command {
            h.update([0]);
            h.update(arg.as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// A missing or unreadable entry is a miss.
    pub fn get(&self, key: &str) -> Option<Vec<Warning>> {
        let text = std::fs::read_to_string(self.dir.join(format!("{key}.json"))).ok()?;
        serde_json::from_str::<Entry>(&text).ok().map(|e| e.warnings)
    }

    pub fn put(&self, key: &str, tool: Tool, tool_version: &str, command: &[String], warnings: &[Warning]) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let entry = Entry {
            tool,
            tool_version: tool_version.to_string(),
            command: command.to_vec(),
            warnings: warnings.to_vec(),
        };
        let json = serde_json::to_string_pretty(&entry).map_err(std::io::Error::other)?;
        atomic_write(&self.dir.join(format!("{key}.json")), json.as_bytes())
    }
}
