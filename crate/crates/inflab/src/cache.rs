//! Persistent μ cache: a JSON array of `{n, tau2, nu, h, W, mu}` rows.
//!
//! Readers share an in-memory [`MuCache`] behind a lock. Saving re-reads the
//! file, merges, and replaces it by renaming a temporary file in the same
//! directory, so concurrent processes never observe a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use inflab_core::barrier::{estimate_mu, MuCache, MuEstimate, MuKey};
use inflab_core::solver::{SolveParams, StencilSpec};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, LabError, LabResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct MuRow {
    n: usize,
    tau2: f64,
    nu: f64,
    h: f64,
    #[serde(rename = "W")]
    width: usize,
    mu: f64,
}

impl From<MuEstimate> for MuRow {
    fn from(e: MuEstimate) -> Self {
        MuRow { n: e.n, tau2: e.tau2, nu: e.nu, h: e.h, width: e.width, mu: e.mu }
    }
}

impl From<MuRow> for MuEstimate {
    fn from(r: MuRow) -> Self {
        MuEstimate { mu: r.mu, n: r.n, tau2: r.tau2, nu: r.nu, h: r.h, width: r.width }
    }
}

pub fn cache_to_json(cache: &MuCache) -> String {
    let rows: Vec<MuRow> = cache.iter().map(MuRow::from).collect();
    serde_json::to_string_pretty(&rows).expect("cache serializes")
}

pub fn cache_from_json(text: &str) -> LabResult<MuCache> {
    let rows: Vec<MuRow> =
        serde_json::from_str(text).map_err(|e| LabError::Format { what: "mu cache", message: e.to_string() })?;
    let mut cache = MuCache::new();
    for r in rows {
        cache.insert(r.into());
    }
    Ok(cache)
}

fn read_file(path: &Path) -> LabResult<MuCache> {
    match fs::read_to_string(path) {
        Ok(text) => cache_from_json(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(MuCache::new()),
        Err(e) => Err(io_err(path)(e)),
    }
}

#[derive(Debug)]
pub struct MuCacheFile {
    path: PathBuf,
    inner: RwLock<MuCache>,
}

impl MuCacheFile {
    /// Loads `path`, or starts empty if it does not exist.
    pub fn open(path: impl Into<PathBuf>) -> LabResult<Self> {
        let path = path.into();
        let cache = read_file(&path)?;
        Ok(MuCacheFile { path, inner: RwLock::new(cache) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &MuKey) -> Option<MuEstimate> {
        self.inner.read().expect("cache lock").get(key)
    }

    pub fn snapshot(&self) -> MuCache {
        self.inner.read().expect("cache lock").clone()
    }

    pub fn insert(&self, est: MuEstimate) {
        self.inner.write().expect("cache lock").insert(est);
    }

    /// Cached value, or a fresh estimate that is stored and saved.
    pub fn get_or_estimate(
        &self,
        n: usize,
        tau2: f64,
        nu: f64,
        h: f64,
        stencil: &StencilSpec,
        params: &SolveParams,
    ) -> LabResult<MuEstimate> {
        if let Some(est) = self.get(&MuKey::new(n, tau2, nu, h, stencil.width())) {
            return Ok(est);
        }
        let est = estimate_mu(n, tau2, nu, h, stencil, params)?;
        self.insert(est);
        self.save()?;
        Ok(est)
    }

    /// Merges with the current file contents, then atomically replaces it.
    pub fn save(&self) -> LabResult<()> {
        let mut merged = read_file(&self.path)?;
        {
            let mut inner = self.inner.write().expect("cache lock");
            for est in inner.iter() {
                merged.insert(est);
            }
            *inner = merged.clone();
        }
        let dir = match self.path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(&dir))?;
        tmp.write_all(cache_to_json(&merged).as_bytes()).map_err(io_err(tmp.path()))?;
        tmp.write_all(b"\n").map_err(io_err(tmp.path()))?;
        tmp.persist(&self.path).map_err(|e| io_err(&self.path)(e.error))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(tau2: f64, mu: f64) -> MuEstimate {
        MuEstimate { mu, n: 2, tau2, nu: 0.5, h: 1.0 / 64.0, width: 3 }
    }

    #[test]
    fn json_round_trip_is_bitwise() {
        let mut c = MuCache::new();
        c.insert(est(0.6, 0.123456789012345678));
        c.insert(est(0.1 + 0.2, 1.0 / 3.0));
        let text = cache_to_json(&c);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let first = &v.as_array().unwrap()[0];
        for key in ["n", "tau2", "nu", "h", "W", "mu"] {
            assert!(first.get(key).is_some(), "{key}");
        }
        assert_eq!(cache_from_json(&text).unwrap(), c);
    }

    #[test]
    fn saves_merge_with_other_writers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("mu.json");
        let a = MuCacheFile::open(&path).unwrap();
        let b = MuCacheFile::open(&path).unwrap();
        a.insert(est(0.5, 0.2));
        a.save().unwrap();
        b.insert(est(0.7, 0.1));
        b.save().unwrap();
        let c = MuCacheFile::open(&path).unwrap();
        assert_eq!(c.snapshot().len(), 2);
        assert_eq!(c.get(&MuKey::of(&est(0.5, 0.0))).unwrap().mu, 0.2);
        // no temporary files left behind
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn estimates_are_computed_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mu.json");
        let stencil = StencilSpec::new(2, 3).unwrap();
        let params = SolveParams::default();
        let file = MuCacheFile::open(&path).unwrap();
        let first = file.get_or_estimate(2, 0.6, 0.5, 1.0 / 32.0, &stencil, &params).unwrap();
        assert!(first.mu > 0.0 && first.mu < 1.0);
        let reopened = MuCacheFile::open(&path).unwrap();
        let key = MuKey::new(2, 0.6, 0.5, 1.0 / 32.0, 3);
        assert_eq!(reopened.get(&key), Some(first));
    }

    #[test]
    fn malformed_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mu.json");
        fs::write(&path, "{not json").unwrap();
        assert!(MuCacheFile::open(&path).is_err());
    }
}
