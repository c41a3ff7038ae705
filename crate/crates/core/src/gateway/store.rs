//! Cache stores: an in-memory map (also the loader for single-file JSON
//! bundles) and a directory layout with one file per entry.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use super::{CacheEntry, GatewayError, ProviderId};

pub trait CacheStore: Send + Sync {
    fn get(&self, provider: ProviderId, key: &str) -> Result<Option<CacheEntry>, GatewayError>;
    fn put(&self, entry: &CacheEntry) -> Result<(), GatewayError>;
    /// All entries, ordered by (provider, key).
    fn entries(&self) -> Result<Vec<CacheEntry>, GatewayError>;

    fn len(&self) -> usize {
        self.entries().map(|e| e.len()).unwrap_or(0)
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn store_err(e: impl std::fmt::Display) -> GatewayError {
    GatewayError::Store(e.to_string())
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    entries: RwLock<BTreeMap<(ProviderId, String), CacheEntry>>,
}

impl MemoryStore {
    pub fn from_entries(entries: impl IntoIterator<Item = CacheEntry>) -> Self {
        let store = Self::default();
        {
            let mut map = store.entries.write().expect("store lock poisoned");
            for e in entries {
                map.insert((e.request.provider, e.key.clone()), e);
            }
        }
        store
    }

    /// Reads a bundle file (JSON array of entries).
    pub fn load_bundle(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let text = fs::read_to_string(path.as_ref()).map_err(store_err)?;
        let entries: Vec<CacheEntry> = serde_json::from_str(&text).map_err(store_err)?;
        Ok(Self::from_entries(entries))
    }

    pub fn to_bundle_string(&self) -> Result<String, GatewayError> {
        let entries = self.entries()?;
        let mut text = serde_json::to_string_pretty(&entries).map_err(store_err)?;
        text.push('\n');
        Ok(text)
    }

    pub fn save_bundle(&self, path: impl AsRef<Path>) -> Result<(), GatewayError> {
        write_atomic(path.as_ref(), self.to_bundle_string()?.as_bytes())
    }
}

impl CacheStore for MemoryStore {
    fn get(&self, provider: ProviderId, key: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let map = self.entries.read().expect("store lock poisoned");
        Ok(map.get(&(provider, key.to_string())).cloned())
    }

    fn put(&self, entry: &CacheEntry) -> Result<(), GatewayError> {
        let mut map = self.entries.write().expect("store lock poisoned");
        map.insert((entry.request.provider, entry.key.clone()), entry.clone());
        Ok(())
    }

    fn entries(&self) -> Result<Vec<CacheEntry>, GatewayError> {
        Ok(self.entries.read().expect("store lock poisoned").values().cloned().collect())
    }

    fn len(&self) -> usize {
        self.entries.read().expect("store lock poisoned").len()
    }
}

/// `<root>/<provider_id>/<first two hex chars>/<key>.json`
#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_path(&self, provider: ProviderId, key: &str) -> PathBuf {
        let shard = key.get(..2).unwrap_or("00");
        self.root.join(provider.as_str()).join(shard).join(format!("{key}.json"))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), GatewayError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(store_err)?;
    }
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    {
        let mut f = fs::File::create(&tmp).map_err(store_err)?;
        f.write_all(bytes).map_err(store_err)?;
        f.sync_data().map_err(store_err)?;
    }
    fs::rename(&tmp, path).map_err(store_err)
}

impl CacheStore for FileStore {
    fn get(&self, provider: ProviderId, key: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.entry_path(provider, key);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(store_err),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(store_err(e)),
        }
    }

    fn put(&self, entry: &CacheEntry) -> Result<(), GatewayError> {
        let mut text = serde_json::to_string_pretty(entry).map_err(store_err)?;
        text.push('\n');
        write_atomic(&self.entry_path(entry.request.provider, &entry.key), text.as_bytes())
    }

    fn entries(&self) -> Result<Vec<CacheEntry>, GatewayError> {
        let mut out = Vec::new();
        for provider in ProviderId::ALL {
            let dir = self.root.join(provider.as_str());
            let Ok(shards) = fs::read_dir(&dir) else { continue };
            for shard in shards {
                let shard = shard.map_err(store_err)?;
                for file in fs::read_dir(shard.path()).map_err(store_err)? {
                    let path = file.map_err(store_err)?.path();
                    if path.extension().is_some_and(|e| e == "json") {
                        let text = fs::read_to_string(&path).map_err(store_err)?;
                        out.push(serde_json::from_str::<CacheEntry>(&text).map_err(store_err)?);
                    }
                }
            }
        }
        out.sort_by(|a, b| (a.request.provider, &a.key).cmp(&(b.request.provider, &b.key)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ProviderRequest, ProviderResponse};
    use chrono::DateTime;
    use serde_json::json;

    fn entry(text: &str) -> CacheEntry {
        let request = ProviderRequest::new(ProviderId::WebAnswer, "answer", json!({"query": text}));
        let at = DateTime::from_timestamp(1_700_000_000, 0).unwrap();
        CacheEntry {
            key: request.cache_key(),
            request,
            response: ProviderResponse {
                payload: json!({"text": text}),
                citations: vec!["https://a.example".into()],
                fetched_at: at,
                from_cache: false,
            },
            stored_at: at,
        }
    }

    #[test]
    fn file_store_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::new(dir.path());
        let e = entry("q");
        store.put(&e).unwrap();
        let path = store.entry_path(ProviderId::WebAnswer, &e.key);
        assert!(path.starts_with(dir.path().join("web_answer").join(&e.key[..2])));
        assert!(path.exists());
        assert_eq!(store.get(ProviderId::WebAnswer, &e.key).unwrap(), Some(e.clone()));
        assert_eq!(store.get(ProviderId::LlmChat, &e.key).unwrap(), None);
        store.put(&e).unwrap();
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mem = MemoryStore::from_entries([entry("a"), entry("b")]);
        let path = dir.path().join("bundle.json");
        mem.save_bundle(&path).unwrap();
        let back = MemoryStore::load_bundle(&path).unwrap();
        assert_eq!(back.entries().unwrap(), mem.entries().unwrap());
        assert_eq!(back.to_bundle_string().unwrap(), mem.to_bundle_string().unwrap());
    }
}
