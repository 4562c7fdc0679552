//! Content-addressed response cache. Every fetched response lands in one
//! JSON file named by the SHA-256 of `url + "\n" + body`, so identical
//! requests are served from disk and a cache directory fully determines an
//! offline run.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::transport::{HttpTransport, TransportError};

/// On-disk cache entry. `url` and `body` are stored alongside the response
/// so a human can inspect what produced each file and `verify` can recompute
/// the key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub url: String,
    pub body: String,
    pub response: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: u64,
    pub bytes: u64,
}

pub fn cache_key(url: &str, body: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(url.as_bytes());
    hasher.update(b"\n");
    hasher.update(body.as_bytes());
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Directory-backed cache with an in-process read-through memo. The memo
/// matters: evaluation runs replay the same SPARQL pages and intros many
/// thousands of times.
pub struct NetCache {
    root: PathBuf,
    memo: Mutex<HashMap<String, Arc<str>>>,
}

impl NetCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, TransportError> {
        let root = root.into();
        fs::create_dir_all(&root)
            .map_err(|e| TransportError::Cache(format!("create {}: {e}", root.display())))?;
        Ok(Self { root, memo: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.root.join(format!("{key}.json"))
    }

    pub fn lookup(&self, key: &str) -> Result<Option<Arc<str>>, TransportError> {
        if let Some(hit) = self.memo.lock().expect("memo lock").get(key) {
            return Ok(Some(hit.clone()));
        }
        let path = self.entry_path(key);
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(TransportError::Cache(format!("read {}: {e}", path.display()))),
        };
        let entry: CacheEntry = serde_json::from_str(&raw)
            .map_err(|e| TransportError::Cache(format!("parse {}: {e}", path.display())))?;
        let response: Arc<str> = entry.response.into();
        self.memo.lock().expect("memo lock").insert(key.to_string(), response.clone());
        Ok(Some(response))
    }

    /// Atomic write: temp file in the cache root, then rename. A crashed run
    /// never leaves a half-written entry behind under the final name.
    pub fn store(&self, url: &str, body: &str, response: &str) -> Result<String, TransportError> {
        let key = cache_key(url, body);
        let entry = CacheEntry {
            url: url.to_string(),
            body: body.to_string(),
            response: response.to_string(),
        };
        let pretty = serde_json::to_string_pretty(&entry)
            .map_err(|e| TransportError::Cache(format!("serialize entry: {e}")))?;
        let final_path = self.entry_path(&key);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)
            .map_err(|e| TransportError::Cache(format!("temp file: {e}")))?;
        tmp.write_all(pretty.as_bytes())
            .and_then(|()| tmp.flush())
            .map_err(|e| TransportError::Cache(format!("write entry: {e}")))?;
        tmp.persist(&final_path)
            .map_err(|e| TransportError::Cache(format!("rename into place: {e}")))?;
        self.memo
            .lock()
            .expect("memo lock")
            .insert(key.clone(), Arc::from(response));
        Ok(key)
    }

    fn entry_files(&self) -> Result<Vec<PathBuf>, TransportError> {
        let mut files = Vec::new();
        let iter = fs::read_dir(&self.root)
            .map_err(|e| TransportError::Cache(format!("read dir {}: {e}", self.root.display())))?;
        for item in iter {
            let item = item.map_err(|e| TransportError::Cache(e.to_string()))?;
            let path = item.path();
            if path.extension().and_then(|s| s.to_str()) == Some("json") {
                files.push(path);
            }
        }
        files.sort();
        Ok(files)
    }

    pub fn stats(&self) -> Result<CacheStats, TransportError> {
        let mut stats = CacheStats::default();
        for path in self.entry_files()? {
            let meta = fs::metadata(&path)
                .map_err(|e| TransportError::Cache(format!("stat {}: {e}", path.display())))?;
            stats.entries += 1;
            stats.bytes += meta.len();
        }
        Ok(stats)
    }

    pub fn clear(&self) -> Result<u64, TransportError> {
        let mut removed = 0;
        for path in self.entry_files()? {
            fs::remove_file(&path)
                .map_err(|e| TransportError::Cache(format!("remove {}: {e}", path.display())))?;
            removed += 1;
        }
        self.memo.lock().expect("memo lock").clear();
        Ok(removed)
    }

    /// Integrity scan: every entry must parse and live under the file name
    /// its content hashes to. Returns a description of each problem found.
    pub fn verify(&self) -> Result<Vec<String>, TransportError> {
        let mut problems = Vec::new();
        for path in self.entry_files()? {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let raw = match fs::read_to_string(&path) {
                Ok(raw) => raw,
                Err(e) => {
                    problems.push(format!("{name}: unreadable ({e})"));
                    continue;
                }
            };
            let entry: CacheEntry = match serde_json::from_str(&raw) {
                Ok(entry) => entry,
                Err(e) => {
                    problems.push(format!("{name}: malformed ({e})"));
                    continue;
                }
            };
            let expect = cache_key(&entry.url, &entry.body);
            if expect != name {
                problems.push(format!("{name}: content hashes to {expect}"));
            }
        }
        Ok(problems)
    }
}

/// Read-through cache wrapper. With an inner transport, misses fall through
/// to it and get stored; without one (offline mode), a miss is an error that
/// names the URL so the missing fixture is easy to spot.
pub struct CachedTransport {
    cache: Arc<NetCache>,
    inner: Option<Box<dyn HttpTransport>>,
}

impl CachedTransport {
    pub fn new(cache: Arc<NetCache>, inner: Box<dyn HttpTransport>) -> Self {
        Self { cache, inner: Some(inner) }
    }

    pub fn offline(cache: Arc<NetCache>) -> Self {
        Self { cache, inner: None }
    }

    pub fn cache(&self) -> &NetCache {
        &self.cache
    }
}

impl HttpTransport for CachedTransport {
    fn fetch(&self, url: &str, body: &str) -> Result<String, TransportError> {
        let key = cache_key(url, body);
        if let Some(hit) = self.cache.lookup(&key)? {
            return Ok(hit.to_string());
        }
        match &self.inner {
            Some(inner) => {
                let response = inner.fetch(url, body)?;
                self.cache.store(url, body, &response)?;
                Ok(response)
            }
            None => Err(TransportError::OfflineMiss { url: url.to_string() }),
        }
    }
}
