//! On-disk response cache for record/replay.
//!
//! One pretty-printed JSON file per request, named by the keccak digest of the canonical
//! key `{chainId, endpoint, method, params}`:
//!
//! ```json
//! { "format": "govaudit-cache/1", "key": {...}, "response": ... }
//! ```
//!
//! Deterministic upstream errors are stored under `"error"` instead of `"response"`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::transport::{Request, TransportError};
use crate::evm::keccak256;

pub const CACHE_FORMAT: &str = "govaudit-cache/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CacheKey {
    pub chain_id: u64,
    #[serde(flatten)]
    pub request: Request,
}

impl CacheKey {
    pub fn new(chain_id: u64, request: &Request) -> Self {
        Self {
            chain_id,
            request: request.clone(),
        }
    }

    /// serde_json maps are ordered, so this string is canonical.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("cache keys serialize")
    }

    pub fn digest(&self) -> String {
        hex::encode(keccak256(self.canonical().as_bytes()).0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CacheEntry {
    pub format: String,
    pub key: CacheKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<TransportError>,
}

impl CacheEntry {
    pub fn outcome(&self) -> Result<Value, TransportError> {
        match (&self.error, &self.response) {
            (Some(error), _) => Err(error.clone()),
            (None, Some(value)) => Ok(value.clone()),
            (None, None) => Ok(Value::Null),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.digest()))
    }

    pub fn load(&self, key: &CacheKey) -> std::io::Result<Option<CacheEntry>> {
        let path = self.path_for(key);
        match fs::read_to_string(&path) {
            Ok(text) => {
                let entry: CacheEntry = serde_json::from_str(&text)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
                if entry.format != CACHE_FORMAT {
                    return Err(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("{}: unsupported cache format {:?}", path.display(), entry.format),
                    ));
                }
                Ok(Some(entry))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Writes to a temporary file in the cache directory and renames it into place.
    pub fn store(&self, key: &CacheKey, outcome: &Result<Value, TransportError>) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let entry = CacheEntry {
            format: CACHE_FORMAT.to_string(),
            key: key.clone(),
            response: outcome.as_ref().ok().cloned(),
            error: outcome.as_ref().err().cloned(),
        };
        let mut text = serde_json::to_string_pretty(&entry).expect("entries serialize");
        text.push('\n');
        let final_path = self.path_for(key);
        let tmp_path = self.dir.join(format!(
            ".{}.{}.tmp",
            key.digest(),
            std::process::id()
        ));
        {
            let mut file = fs::File::create(&tmp_path)?;
            file.write_all(text.as_bytes())?;
            file.sync_all()?;
        }
        fs::rename(&tmp_path, &final_path)
    }
}
