//! Persisted run reports.
//!
//! A report is deterministic given its resolved configuration, so reruns
//! produce byte-identical JSON. Wall-clock time is the one nondeterministic
//! measurement and lives in a `<name>.time` sidecar next to the report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optim::Method;

pub const SCHEMA_VERSION: u32 = 1;

/// One training run at a fixed learning rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// Hex SHA-256 of the resolved run configuration.
    pub fingerprint: String,
    pub method: Method,
    pub seed: u64,
    pub lr: f64,
    pub epochs: usize,
    /// Mean optimizer objective per epoch.
    pub train_loss: Vec<f64>,
    /// Validation AUC per epoch.
    pub valid_auc: Vec<f64>,
    /// Zero-based epoch whose model was kept.
    pub best_epoch: Option<usize>,
    pub best_valid_auc: Option<f64>,
    /// Test AUC of the kept model.
    pub test_auc: Option<f64>,
    pub version: String,
    /// Set when training failed; the numeric fields are then empty.
    pub error: Option<String>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && self.test_auc.is_some()
    }
}

/// The learning rate chosen for one (method, seed) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub schema_version: u32,
    pub method: Method,
    pub seed: u64,
    /// Best-validation run, or the first failure when every rate failed.
    pub report: RunReport,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub lr: f64,
    pub fingerprint: String,
    pub best_valid_auc: Option<f64>,
    pub error: Option<String>,
}

impl Selection {
    pub fn file_name(&self) -> String {
        format!("{}_seed{}.json", self.method, self.seed)
    }
}

/// SHA-256 over the canonical JSON of `value`. Object keys are emitted in
/// sorted order, so field order never matters.
pub fn fingerprint<T: Serialize>(value: &T) -> Result<String> {
    let canonical: serde_json::Value = serde_json::to_value(value)?;
    let bytes = serde_json::to_vec(&canonical)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `bytes` to `path` via a temporary file and a rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Loads every selection under `dir/selected`, sorted by method then seed.
pub fn load_selections(out_dir: &Path) -> Result<Vec<Selection>> {
    let dir = out_dir.join("selected");
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let sel: Selection = read_json(&path)?;
            if sel.schema_version != SCHEMA_VERSION {
                return Err(Error::Format(format!(
                    "{} has schema version {}, expected {SCHEMA_VERSION}",
                    path.display(),
                    sel.schema_version
                )));
            }
            out.push(sel);
        }
    }
    out.sort_by_key(|s| (s.method, s.seed));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn fingerprint_ignores_key_order() {
        let a: BTreeMap<&str, f64> = [("x", 1.0), ("y", 2.0)].into();
        let b = serde_json::json!({"y": 2.0, "x": 1.0});
        assert_eq!(fingerprint(&a).unwrap(), fingerprint(&b).unwrap());
        let c = serde_json::json!({"y": 2.0, "x": 1.5});
        assert_ne!(fingerprint(&a).unwrap(), fingerprint(&c).unwrap());
        assert_eq!(fingerprint(&a).unwrap().len(), 64);
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"{}").unwrap();
        write_atomic(&p, b"[]").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"[]");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
