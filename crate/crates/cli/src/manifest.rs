//! Run manifests: one JSON line per stage invocation in `<out-dir>/runs.jsonl`.
//!
//! The run id hashes the stage, config hashes, seed and input contents, so
//! rerunning a stage on the same inputs reproduces the same id and the same
//! artifacts. Timestamps are recorded but not hashed.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use vlbias::hashing::sha256_hex;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Curate,
    Prompts,
    Evaluate,
    Analyze,
    Debias,
    Report,
    Correlate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub stage: Stage,
    pub config_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub started_at: u64,
    pub finished_at: u64,
    pub tool_version: String,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Hash of a file, or of every file below a directory (sorted by relative path).
pub fn hash_path(path: &Path) -> CliResult<String> {
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, path, &mut files)?;
        files.sort();
        let mut acc = String::new();
        for rel in files {
            let h = sha256_hex(&std::fs::read(path.join(&rel))?);
            acc.push_str(&format!("{}\t{h}\n", rel.display()));
        }
        Ok(sha256_hex(acc.as_bytes()))
    } else {
        Ok(sha256_hex(&std::fs::read(path)?))
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            out.push(p.strip_prefix(root).unwrap_or(&p).to_path_buf());
        }
    }
    Ok(())
}

pub struct RunRecorder {
    manifest: RunManifest,
    out_dir: PathBuf,
    pending: Vec<PathBuf>,
}

impl RunRecorder {
    pub fn new(stage: Stage, seed: u64, out_dir: &Path) -> RunRecorder {
        RunRecorder {
            manifest: RunManifest {
                run_id: String::new(),
                stage,
                config_hashes: BTreeMap::new(),
                seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_at: now(),
                finished_at: 0,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            out_dir: out_dir.to_path_buf(),
            pending: Vec::new(),
        }
    }

    pub fn config(&mut self, name: &str, hash: String) -> &mut Self {
        self.manifest.config_hashes.insert(name.to_string(), hash);
        self
    }

    pub fn input(&mut self, path: &Path) -> CliResult<&mut Self> {
        let sha256 = hash_path(path)?;
        self.manifest.inputs.push(Artifact { path: path.display().to_string(), sha256 });
        Ok(self)
    }

    /// Content address of this run; fixed once inputs and configs are known.
    pub fn run_id(&self) -> String {
        let key = serde_json::json!({
            "stage": self.manifest.stage,
            "config_hashes": self.manifest.config_hashes,
            "seed": self.manifest.seed,
            "inputs": self.manifest.inputs.iter().map(|a| &a.sha256).collect::<Vec<_>>(),
        });
        sha256_hex(key.to_string().as_bytes())[..16].to_string()
    }

    /// Register an output; it is hashed when the run finishes.
    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.pending.push(path.into());
    }

    pub fn outputs(&self) -> &[PathBuf] {
        &self.pending
    }

    pub fn finish(mut self) -> CliResult<RunManifest> {
        self.manifest.run_id = self.run_id();
        for p in std::mem::take(&mut self.pending) {
            let sha256 = hash_path(&p)?;
            self.manifest.outputs.push(Artifact { path: p.display().to_string(), sha256 });
        }
        self.manifest.finished_at = now();
        std::fs::create_dir_all(&self.out_dir)?;
        let mut f = OpenOptions::new().create(true).append(true).open(self.out_dir.join("runs.jsonl"))?;
        writeln!(f, "{}", serde_json::to_string(&self.manifest)?)?;
        Ok(self.manifest)
    }
}

pub fn read_runs(out_dir: &Path) -> CliResult<Vec<RunManifest>> {
    let text = match std::fs::read_to_string(out_dir.join("runs.jsonl")) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}
