//! Response cache keyed by a digest of the request.
//!
//! Entries live in memory and, when a directory is configured, as one JSON
//! file per entry named by the hex digest. Reads are concurrent; writes are
//! serialized and atomic.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

/// Hex SHA-256 over the model name and the rendered prompt, nothing else.
pub fn request_digest(model_name: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_name.as_bytes());
    hasher.update([0u8]);
    hasher.update(prompt.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request_digest: String,
    pub response_text: String,
    /// Seconds since the Unix epoch at which the entry was stored.
    pub timestamp: u64,
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheEntry>>,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| LlmError::Cache(e.to_string()))?;
        Ok(ResponseCache {
            dir: Some(dir),
            ..Self::default()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn entry_path(&self, digest: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{digest}.json")))
    }

    pub fn get(&self, digest: &str) -> Option<CacheEntry> {
        if let Some(hit) = self.entries.read().expect("cache lock").get(digest) {
            return Some(hit.clone());
        }
        let path = self.entry_path(digest)?;
        let text = std::fs::read_to_string(path).ok()?;
        let entry: CacheEntry = match serde_json::from_str(&text) {
            Ok(e) => e,
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {digest}: {e}");
                return None;
            }
        };
        if entry.request_digest != digest {
            log::warn!("cache entry {digest} carries digest {}", entry.request_digest);
            return None;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(digest.to_string(), entry.clone());
        Some(entry)
    }

    pub fn put(&self, digest: &str, response_text: &str) -> Result<CacheEntry, LlmError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let entry = CacheEntry {
            request_digest: digest.to_string(),
            response_text: response_text.to_string(),
            timestamp,
        };
        let _guard = self.write_lock.lock().expect("cache write lock");
        if let Some(path) = self.entry_path(digest) {
            let json = serde_json::to_vec_pretty(&entry).expect("serializable entry");
            crate::io::write_atomic(&path, &json).map_err(|e| LlmError::Cache(e.to_string()))?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(digest.to_string(), entry.clone());
        Ok(entry)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
