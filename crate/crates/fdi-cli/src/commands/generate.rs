//! `fdi generate` — the full pipeline. Reads the corpus, builds (or loads,
//! or connects to) a scoring backend, masks each document, infills the
//! blanks, and writes a self-describing run directory:
//!
//! - `fakes.jsonl`      the deployable decoys (id + text only)
//! - `answer_key.jsonl` which spans were replaced and with what
//! - `masked.jsonl`     the masked examples the fakes were built from
//! - `manifest.json`    config digest, counts, failures, output digests
//! - `timings.json`     wall-clock stage timings (not part of the manifest)

use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use fdi_core::backends::{InfillBackend, NGramModel, RemoteBackend, RetryConfig, Vocabulary};
use fdi_core::concepts::build_pool;
use fdi_core::decoding::{generate_fakes, FakeDocument, Replacement};
use fdi_core::masking::{sample_masked_examples, MaskedExample};
use fdi_core::seeds::{doc_seed, stage_seed, STAGE_DECODE, STAGE_MASK};
use fdi_core::text::Document;

use crate::commands::{
    failure, is_backend_unreachable, load_corpus, load_stopwords, print_failures, with_workers,
};
use crate::config::{BackendFlags, BackendKind, CommonFlags, DecodeFlags, MaskFlags, Settings};
use crate::manifest::{default_run_dir, Failure, Manifest, RunDir};

#[derive(clap::Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonFlags,
    #[command(flatten)]
    pub mask: MaskFlags,
    #[command(flatten)]
    pub decode: DecodeFlags,
    #[command(flatten)]
    pub backend: BackendFlags,
    /// Run directory; defaults to a fresh timestamped one under runs/.
    #[arg(long = "run-dir")]
    pub run_dir: Option<PathBuf>,
}

/// The deployable record: no originals, no replacement details.
#[derive(Serialize)]
struct FakeLine<'a> {
    doc_id: &'a str,
    fake_id: &'a str,
    text: &'a str,
}

/// Operator-side record pairing each fake with what was changed.
#[derive(Serialize)]
struct KeyLine<'a> {
    fake_id: &'a str,
    doc_id: &'a str,
    /// Decoding stream seed for this fake.
    seed: u64,
    /// Seed of the masked example the fake was built from; joins against
    /// `masked.jsonl`.
    example_seed: u64,
    replacements: &'a [Replacement],
}

struct DocOutput {
    examples: Vec<MaskedExample>,
    fakes: Vec<FakeDocument>,
}

enum DocError {
    /// Recorded; the batch continues.
    Skip(Failure),
    /// Aborts the whole run (backend unreachable).
    Fatal(fdi_core::Error),
}

fn build_backend(
    settings: &Settings,
    docs: &[Document],
) -> Result<Box<dyn InfillBackend>> {
    match settings.backend.kind {
        BackendKind::Ngram => {
            let model = match &settings.backend.model {
                Some(path) => NGramModel::load_path(path)
                    .with_context(|| format!("loading model {}", path.display()))?,
                None => {
                    let mut lines = Vec::new();
                    for doc in docs {
                        // Documents too short to mask simply contribute no
                        // training pairs; generation for them fails later
                        // with a clearer stage attribution.
                        match super::traindata::pairs_for_doc(
                            doc,
                            settings,
                            settings.backend.train_per_doc,
                        ) {
                            Ok(mut l) => lines.append(&mut l),
                            Err(fdi_core::Error::TooShortToMask { .. }) => {}
                            Err(e) => return Err(e.into()),
                        }
                    }
                    NGramModel::train(
                        lines.iter().map(String::as_str),
                        settings.backend.order,
                        settings.backend.alpha,
                    )
                    .context("training the n-gram backend")?
                }
            };
            if let Some(path) = &settings.backend.save_model {
                model
                    .save_path(path)
                    .with_context(|| format!("saving model {}", path.display()))?;
            }
            Ok(Box::new(model))
        }
        BackendKind::Remote => {
            let endpoint = settings
                .backend
                .endpoint
                .as_deref()
                .expect("validated during config resolution");
            let vocab = Vocabulary::build(
                docs.iter()
                    .flat_map(|d| d.tokens().iter().map(|t| t.surface.as_str())),
            );
            let backend = RemoteBackend::new(
                endpoint,
                vocab,
                RetryConfig::default(),
                settings.backend.top_k,
            )?;
            // Preflight with a minimal context so an unreachable service
            // fails the run up front instead of per document.
            let probe = [backend.vocabulary().specials().sep];
            backend
                .score_next(&probe)
                .with_context(|| format!("preflight request to {endpoint}"))?;
            Ok(Box::new(backend))
        }
    }
}

fn process_doc(
    doc: &Document,
    settings: &Settings,
    stopwords: &fdi_core::text::StopwordSet,
    backend: &dyn InfillBackend,
) -> Result<DocOutput, DocError> {
    let pool = build_pool(doc, stopwords, settings.masking.q_min, settings.masking.t_s);
    let parent = doc_seed(settings.seed, doc.id());

    let mut masking = settings.masking.clone();
    masking.seed = stage_seed(parent, STAGE_MASK);
    let examples = sample_masked_examples(doc, &pool, &masking)
        .map_err(|e| DocError::Skip(failure(doc.id(), "mask", &e)))?;

    let mut decoding = settings.decoding.clone();
    decoding.seed = stage_seed(parent, STAGE_DECODE);
    let fakes = generate_fakes(doc, &pool, backend, &masking, &decoding, settings.fakes)
        .map_err(|e| {
            if is_backend_unreachable(&e) {
                DocError::Fatal(e)
            } else {
                DocError::Skip(failure(doc.id(), "decode", &e))
            }
        })?;

    Ok(DocOutput { examples, fakes })
}

pub fn run(args: &GenerateArgs) -> Result<u8> {
    let settings = Settings::resolve(
        &args.common,
        &args.mask,
        &args.decode,
        &args.backend,
        None,
    )?;
    let dir = args
        .run_dir
        .clone()
        .unwrap_or_else(|| default_run_dir(&PathBuf::from("runs"), settings.seed));
    let mut run = RunDir::create(&dir)?;
    let mut manifest = Manifest::new("generate", settings.snapshot(), settings.seed);

    run.stage("ingest");
    let docs = load_corpus(&settings)?;
    let stopwords = load_stopwords(&settings)?;

    run.stage("backend");
    let backend = build_backend(&settings, &docs)?;

    run.stage("generate");
    let results: Vec<Result<DocOutput, DocError>> = with_workers(settings.workers, || {
        docs.par_iter()
            .map(|doc| process_doc(doc, &settings, &stopwords, backend.as_ref()))
            .collect()
    })?;

    let mut failures = Vec::new();
    let mut outputs = Vec::new();
    for result in results {
        match result {
            Ok(out) => outputs.push(out),
            Err(DocError::Skip(f)) => failures.push(f),
            Err(DocError::Fatal(e)) => {
                return Err(anyhow::Error::from(e).context("backend became unreachable mid-run"))
            }
        }
    }

    run.stage("write");
    let mut masked = Vec::new();
    let mut fakes = Vec::new();
    let mut key = Vec::new();
    let (mut n_examples, mut n_fakes) = (0usize, 0usize);
    for out in &outputs {
        for ex in &out.examples {
            serde_json::to_writer(&mut masked, ex)?;
            masked.push(b'\n');
            n_examples += 1;
        }
        for fake in &out.fakes {
            serde_json::to_writer(
                &mut fakes,
                &FakeLine {
                    doc_id: &fake.doc_id,
                    fake_id: &fake.fake_id,
                    text: &fake.text,
                },
            )?;
            fakes.push(b'\n');
            serde_json::to_writer(
                &mut key,
                &KeyLine {
                    fake_id: &fake.fake_id,
                    doc_id: &fake.doc_id,
                    seed: fake.seed,
                    example_seed: fake.example_seed,
                    replacements: &fake.replacements,
                },
            )?;
            key.push(b'\n');
            n_fakes += 1;
        }
    }
    run.write(&mut manifest, "fakes.jsonl", &fakes, n_fakes)?;
    run.write(&mut manifest, "answer_key.jsonl", &key, n_fakes)?;
    run.write(&mut manifest, "masked.jsonl", &masked, n_examples)?;

    manifest.count("documents", docs.len());
    manifest.count("masked_examples", n_examples);
    manifest.count("fakes", n_fakes);
    manifest.count("failed_documents", failures.len());
    let code = if failures.is_empty() { 0 } else { 2 };
    print_failures(&failures);
    manifest.set_failures(failures);
    run.finish(&manifest)?;

    eprintln!(
        "wrote {} fakes for {} documents to {}",
        n_fakes,
        docs.len(),
        dir.display()
    );
    Ok(code)
}
