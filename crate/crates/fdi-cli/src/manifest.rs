//! Run manifests: a deterministic record of what a pipeline run produced.
//!
//! `manifest.json` holds the configuration snapshot and digest, counts,
//! failures, and a SHA-256 per output file — everything needed to audit or
//! reproduce the run. Wall-clock timings go to a `timings.json` sidecar so
//! the manifest bytes depend only on config and seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// One document that failed a pipeline stage; the rest of the batch keeps
/// going.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub doc_id: String,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub bytes: usize,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    /// SHA-256 over the serialized `config` value.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub counts: BTreeMap<String, usize>,
    /// Sorted by document id.
    pub failures: Vec<Failure>,
    /// Keyed by file name within the run directory.
    pub outputs: BTreeMap<String, OutputFile>,
    /// Sidecar holding wall-clock stage timings for this run.
    pub timings_file: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Manifest {
        let config_digest = sha256_hex(
            serde_json::to_string(&config)
                .expect("config snapshot serializes")
                .as_bytes(),
        );
        Manifest {
            command: command.to_owned(),
            config_digest,
            config,
            seed,
            counts: BTreeMap::new(),
            failures: Vec::new(),
            outputs: BTreeMap::new(),
            timings_file: "timings.json".to_owned(),
        }
    }

    pub fn count(&mut self, key: &str, value: usize) {
        self.counts.insert(key.to_owned(), value);
    }

    pub fn set_failures(&mut self, mut failures: Vec<Failure>) {
        failures.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        self.failures = failures;
    }
}

/// A pipeline run directory. Outputs are written through [`RunDir::write`]
/// so every file is digested and listed in the manifest; a directory that
/// already holds a manifest is refused rather than overwritten.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    started: Instant,
    stages: Vec<(String, f64)>,
    stage_started: Option<(String, Instant)>,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<RunDir> {
        std::fs::create_dir_all(path)
            .with_context(|| format!("creating run directory {}", path.display()))?;
        if path.join("manifest.json").exists() {
            bail!(
                "{} already holds a manifest; runs are append-only, pick a fresh directory",
                path.display()
            );
        }
        Ok(RunDir {
            path: path.to_owned(),
            started: Instant::now(),
            stages: Vec::new(),
            stage_started: None,
        })
    }

    /// Marks the start of a named stage; the previous stage (if any) ends.
    pub fn stage(&mut self, name: &str) {
        self.finish_stage();
        self.stage_started = Some((name.to_owned(), Instant::now()));
    }

    fn finish_stage(&mut self) {
        if let Some((name, at)) = self.stage_started.take() {
            self.stages.push((name, at.elapsed().as_secs_f64()));
        }
    }

    /// Writes one output file and records its digest in the manifest.
    pub fn write(
        &self,
        manifest: &mut Manifest,
        name: &str,
        bytes: &[u8],
        records: usize,
    ) -> Result<()> {
        let target = self.path.join(name);
        std::fs::write(&target, bytes)
            .with_context(|| format!("writing {}", target.display()))?;
        manifest.outputs.insert(
            name.to_owned(),
            OutputFile {
                bytes: bytes.len(),
                records,
                sha256: sha256_hex(bytes),
            },
        );
        Ok(())
    }

    /// Writes `manifest.json` and the `timings.json` sidecar, consuming the
    /// run.
    pub fn finish(mut self, manifest: &Manifest) -> Result<()> {
        self.finish_stage();

        #[derive(Serialize)]
        struct Timings {
            total_seconds: f64,
            stages: Vec<Stage>,
        }
        #[derive(Serialize)]
        struct Stage {
            name: String,
            seconds: f64,
        }
        let timings = Timings {
            total_seconds: self.started.elapsed().as_secs_f64(),
            stages: self
                .stages
                .drain(..)
                .map(|(name, seconds)| Stage { name, seconds })
                .collect(),
        };
        std::fs::write(
            self.path.join(&manifest.timings_file),
            serde_json::to_string_pretty(&timings)? + "\n",
        )?;
        std::fs::write(
            self.path.join("manifest.json"),
            serde_json::to_string_pretty(manifest)? + "\n",
        )?;
        Ok(())
    }
}

/// Default run-directory name: creation time plus seed, for at-a-glance
/// ordering of successive runs. (The name never appears inside outputs, so
/// reruns still produce identical bytes.)
pub fn default_run_dir(base: &Path, seed: u64) -> PathBuf {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    base.join(format!("run-{stamp}-s{seed}"))
}
