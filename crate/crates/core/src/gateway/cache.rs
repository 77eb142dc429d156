use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{ChatRequest, GatewayError};
use crate::fsutil::atomic_write;
use crate::timestamp;

/// One cached response, stored as `<dir>/<key>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    /// The canonical request fields the key was computed from.
    pub key_fields: Value,
    pub response_content: String,
    pub created_at: String,
}

/// Canonical form of the fields that identify a request: keys in sorted
/// order, line endings normalized to `\n`.
pub fn key_fields(model_name: &str, request: &ChatRequest) -> Value {
    let messages: Vec<Value> = request
        .messages
        .iter()
        .map(|m| {
            json!({
                "content": normalize_newlines(&m.content),
                "role": m.role,
            })
        })
        .collect();
    json!({
        "max_tokens": request.max_tokens,
        "messages": messages,
        "model": model_name,
        "temperature": request.temperature,
    })
}

/// Hex SHA-256 of the compact canonical serialization of [`key_fields`].
pub fn cache_key(model_name: &str, request: &ChatRequest) -> String {
    let canonical = serde_json::to_string(&key_fields(model_name, request)).expect("json");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn normalize_newlines(s: &str) -> String {
    s.replace("\r\n", "\n").replace('\r', "\n")
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> ResponseCache {
        ResponseCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.entry_path(key);
        let raw = match std::fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(cache_io(&path, e)),
        };
        let entry: CacheEntry = serde_json::from_str(&raw).map_err(|e| cache_io(&path, e))?;
        Ok(Some(entry))
    }

    pub fn put(
        &self,
        key: &str,
        model_name: &str,
        request: &ChatRequest,
        response_content: &str,
    ) -> Result<CacheEntry, GatewayError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| cache_io(&self.dir, e))?;
        let entry = CacheEntry {
            key: key.to_string(),
            key_fields: key_fields(model_name, request),
            response_content: response_content.to_string(),
            created_at: timestamp::now_rfc3339(),
        };
        let path = self.entry_path(key);
        let mut text = serde_json::to_string_pretty(&entry).expect("json");
        text.push('\n');
        atomic_write(&path, text.as_bytes()).map_err(|e| cache_io(&path, e))?;
        Ok(entry)
    }
}

fn cache_io(path: &Path, e: impl std::fmt::Display) -> GatewayError {
    GatewayError::CacheIo {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}
