//! Run manifests: what was run, with which settings, on which inputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::settings::Context;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Embedded in every report. Wall-clock time is left out unless asked for,
/// so that rerunning a command reproduces its report byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<InputHash>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_s: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, ctx: &Context) -> Self {
        Self {
            command: command.to_string(),
            args: BTreeMap::new(),
            config: serde_json::to_value(&ctx.settings).expect("settings serialize"),
            seed: ctx.seed,
            inputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_s: None,
        }
    }

    pub fn arg(mut self, key: &str, value: impl ToString) -> Self {
        self.args.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(mut self, path: &Path) -> anyhow::Result<Self> {
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: hash_path(path)?,
        });
        Ok(self)
    }

    /// Records elapsed time when the context asks for timings.
    pub fn finish(mut self, ctx: &Context, started: Instant) -> Self {
        if ctx.timings {
            self.wall_s = Some(started.elapsed().as_secs_f64());
        }
        self
    }
}

/// SHA-256 of a file, or of a directory tree: relative paths and contents
/// of every file, visited in sorted order.
pub fn hash_path(path: &Path) -> anyhow::Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, path, &mut files)?;
        files.sort();
        for rel in files {
            let bytes = std::fs::read(path.join(&rel))?;
            hasher.update(rel.as_bytes());
            hasher.update([0u8]);
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
    } else {
        hasher.update(std::fs::read(path)?);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> anyhow::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root)?;
            // separators normalized so hashes agree across platforms
            out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
        }
    }
    Ok(())
}
