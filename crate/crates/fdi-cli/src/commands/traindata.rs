//! `fdi traindata` — random-mask every document several times and write the
//! serialized training pairs an infill model learns from, one per line.

use std::path::PathBuf;

use anyhow::Result;
use rayon::prelude::*;

use fdi_core::masking::random_mask_training;
use fdi_core::pairs::serialize_pair;
use fdi_core::seeds::{doc_seed, stage_seed, STAGE_TRAIN};
use fdi_core::text::Document;

use crate::commands::{failure, load_corpus, print_failures, with_workers};
use crate::config::{CommonFlags, Settings};
use crate::manifest::{default_run_dir, Failure, Manifest, RunDir};

#[derive(clap::Args, Debug)]
pub struct TraindataArgs {
    #[command(flatten)]
    pub common: CommonFlags,
    /// Training pairs drawn per document.
    #[arg(long = "per-doc")]
    pub per_doc: Option<usize>,
    /// Run directory; defaults to a fresh timestamped one under runs/.
    #[arg(long = "run-dir")]
    pub run_dir: Option<PathBuf>,
}

/// Draws the configured number of training pairs from one document. Also
/// used by `generate` when it fits its n-gram backend.
pub fn pairs_for_doc(
    doc: &Document,
    settings: &Settings,
    per_doc: usize,
) -> Result<Vec<String>, fdi_core::Error> {
    let base = stage_seed(doc_seed(settings.seed, doc.id()), STAGE_TRAIN);
    let mut lines = Vec::with_capacity(per_doc);
    for j in 0..per_doc {
        let mut params = settings.training.clone();
        params.seed = base ^ j as u64;
        let example = random_mask_training(doc, &params)?;
        lines.push(serialize_pair(doc, &example));
    }
    Ok(lines)
}

pub fn run(args: &TraindataArgs) -> Result<u8> {
    let settings = Settings::resolve(
        &args.common,
        &Default::default(),
        &Default::default(),
        &Default::default(),
        args.per_doc,
    )?;
    let dir = args
        .run_dir
        .clone()
        .unwrap_or_else(|| default_run_dir(&PathBuf::from("runs"), settings.seed));
    let mut run = RunDir::create(&dir)?;
    let mut manifest = Manifest::new("traindata", settings.snapshot(), settings.seed);

    run.stage("ingest");
    let docs = load_corpus(&settings)?;

    run.stage("mask");
    let per_doc = settings.training_per_doc;
    let results: Vec<Result<Vec<String>, Failure>> = with_workers(settings.workers, || {
        docs.par_iter()
            .map(|doc| {
                pairs_for_doc(doc, &settings, per_doc)
                    .map_err(|e| failure(doc.id(), "traindata", &e))
            })
            .collect()
    })?;

    let mut payload = String::new();
    let mut failures = Vec::new();
    let mut pairs = 0usize;
    for result in results {
        match result {
            Ok(lines) => {
                pairs += lines.len();
                for line in lines {
                    payload.push_str(&line);
                    payload.push('\n');
                }
            }
            Err(f) => failures.push(f),
        }
    }

    run.stage("write");
    run.write(&mut manifest, "train.txt", payload.as_bytes(), pairs)?;
    manifest.count("documents", docs.len());
    manifest.count("pairs", pairs);
    manifest.count("failed_documents", failures.len());
    let code = if failures.is_empty() { 0 } else { 2 };
    print_failures(&failures);
    manifest.set_failures(failures);
    run.finish(&manifest)?;

    eprintln!("wrote {} training pairs to {}", pairs, dir.display());
    Ok(code)
}
