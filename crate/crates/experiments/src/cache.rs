//! Content-addressed JSON cache for computed rows.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ExpError, Result};

/// Environment variable that relocates the cache.
pub const CACHE_ENV: &str = "QILLUM_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()) }
    }

    /// `$QILLUM_CACHE_DIR` if set, else `default`.
    pub fn from_env_or(default: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::at(PathBuf::from(d)),
            _ => Self::at(default),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// SHA-256 of the JSON encoding of `key` (which should include the code
    /// version), hex encoded.
    pub fn key<K: Serialize>(key: &K) -> String {
        let bytes = serde_json::to_vec(key).expect("cache keys serialise");
        hex::encode(Sha256::digest(&bytes))
    }

    fn path(&self, hash: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{hash}.json")))
    }

    pub fn get<V: DeserializeOwned>(&self, hash: &str) -> Option<V> {
        let text = std::fs::read(self.path(hash)?).ok()?;
        // a corrupt or stale entry is simply recomputed
        serde_json::from_slice(&text).ok()
    }

    pub fn put<V: Serialize>(&self, hash: &str, value: &V) -> Result<()> {
        let Some(path) = self.path(hash) else { return Ok(()) };
        let dir = path.parent().expect("cache file has a parent");
        std::fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))?;
        // write-then-rename keeps concurrent readers from seeing half a file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let body = serde_json::to_vec(value).expect("cache values serialise");
        std::fs::write(&tmp, body).map_err(|e| ExpError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| ExpError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::at(dir.path());
        let h = Cache::key(&("row", 0.1f64, 3u32));
        assert_eq!(h.len(), 64);
        assert_ne!(h, Cache::key(&("row", 0.1f64, 4u32)));
        let v = vec![0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, 2.2250738585072014e-308];
        cache.put(&h, &v).unwrap();
        let back: Vec<f64> = cache.get(&h).unwrap();
        assert_eq!(back, v);
        assert!(Cache::disabled().get::<Vec<f64>>(&h).is_none());
    }
}
