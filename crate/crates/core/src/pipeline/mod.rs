//! Resumable stage execution over a file-based workspace.
//!
//! Every stage writes under `<workspace>/<stage>/` and records its outputs'
//! hashes, its input hash and its config hash in `manifest.json`. A stage
//! whose inputs and config are unchanged is skipped.

mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, TryLockError};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{sha256_hex, write_atomic};

pub use stages::{run_stage, search_query, snapshot_hash};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Extract,
    Clean,
    Dedup,
    Augment,
    Relate,
    Index,
    Search,
    Eval,
    Stats,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Clean,
        Stage::Dedup,
        Stage::Augment,
        Stage::Relate,
        Stage::Index,
        Stage::Search,
        Stage::Eval,
        Stage::Stats,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Clean => "clean",
            Stage::Dedup => "dedup",
            Stage::Augment => "augment",
            Stage::Relate => "relate",
            Stage::Index => "index",
            Stage::Search => "search",
            Stage::Eval => "eval",
            Stage::Stats => "stats",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// Output files (workspace-relative path, bytes) and a one-line summary.
pub type Produced = (Vec<(String, Vec<u8>)>, String);

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub input_hash: String,
    pub config_hash: String,
    /// Workspace-relative output path to SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
}

impl StageRecord {
    /// Hash over the output hashes, used as the input hash of later stages.
    pub fn digest(&self) -> String {
        let joined: String = self
            .outputs
            .iter()
            .map(|(p, h)| format!("{p}\t{h}\n"))
            .collect();
        sha256_hex(joined.as_bytes())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    /// Keyed by stage name, or `stage.<citation filter>` for per-filter
    /// stages.
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageOutcome {
    Ran { outputs: Vec<String>, summary: String },
    UpToDate,
}

/// An open workspace holding the advisory lock until dropped.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    _lock: File,
}

impl Workspace {
    /// Creates the directory if needed and takes the exclusive lock.
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let lock_path = root.join(LOCK_FILE);
        let lock = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| Error::io(&lock_path, e))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(Error::Locked(lock_path)),
            Err(TryLockError::Error(e)) => return Err(Error::io(&lock_path, e)),
        }
        Ok(Workspace {
            root: root.to_path_buf(),
            _lock: lock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let path = self.path(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest {
                tool_version: TOOL_VERSION.into(),
                ..Default::default()
            });
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Record {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    fn save_manifest(&self, manifest: &Manifest) -> Result<()> {
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(&self.path(MANIFEST_FILE), text.as_bytes())
    }

    /// The record of `key` if every listed output still exists.
    pub fn completed(&self, key: &str) -> Result<Option<StageRecord>> {
        let manifest = self.manifest()?;
        Ok(manifest
            .stages
            .get(key)
            .filter(|r| r.outputs.keys().all(|p| self.path(p).is_file()))
            .cloned())
    }

    /// Records of `keys`, failing with the names of any stage not yet run.
    pub fn require(&self, keys: &[(&str, String)]) -> Result<Vec<StageRecord>> {
        let mut found = Vec::new();
        let mut missing = Vec::new();
        for (key, label) in keys {
            match self.completed(key)? {
                Some(r) => found.push(r),
                None => missing.push(label.clone()),
            }
        }
        if missing.is_empty() {
            Ok(found)
        } else {
            Err(Error::MissingStage(missing))
        }
    }

    fn up_to_date(&self, key: &str, input_hash: &str, config_hash: &str) -> Result<bool> {
        let Some(record) = self.completed(key)? else { return Ok(false) };
        if record.input_hash != input_hash || record.config_hash != config_hash {
            return Ok(false);
        }
        for (rel, hash) in &record.outputs {
            let path = self.path(rel);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != *hash {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Runs `produce` unless `key` is up to date, then writes its outputs and
    /// the manifest entry atomically.
    pub fn execute(
        &self,
        key: &str,
        input_hash: String,
        config_hash: String,
        force: bool,
        produce: impl FnOnce() -> Result<Produced>,
    ) -> Result<StageOutcome> {
        if !force && self.up_to_date(key, &input_hash, &config_hash)? {
            log::info!("{key}: up to date");
            return Ok(StageOutcome::UpToDate);
        }
        let (files, summary) = produce()?;
        let mut outputs = BTreeMap::new();
        for (rel, bytes) in &files {
            write_atomic(&self.path(rel), bytes)?;
            outputs.insert(rel.clone(), sha256_hex(bytes));
        }
        let mut manifest = self.manifest()?;
        manifest.tool_version = TOOL_VERSION.into();
        manifest.stages.insert(
            key.to_string(),
            StageRecord {
                input_hash,
                config_hash,
                outputs,
            },
        );
        self.save_manifest(&manifest)?;
        Ok(StageOutcome::Ran {
            outputs: files.into_iter().map(|(p, _)| p).collect(),
            summary,
        })
    }
}
