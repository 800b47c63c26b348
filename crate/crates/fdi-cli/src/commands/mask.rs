//! `fdi mask` — draw masked examples per document and emit them as JSONL.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;

use fdi_core::concepts::build_pool;
use fdi_core::masking::{sample_masked_examples, MaskedExample};
use fdi_core::seeds::{doc_seed, stage_seed, STAGE_MASK};

use crate::commands::{failure, load_corpus, load_stopwords, print_failures, with_workers};
use crate::config::{CommonFlags, MaskFlags, Settings};
use crate::manifest::Failure;

#[derive(clap::Args, Debug)]
pub struct MaskArgs {
    #[command(flatten)]
    pub common: CommonFlags,
    #[command(flatten)]
    pub mask: MaskFlags,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &MaskArgs) -> Result<u8> {
    let settings = Settings::resolve(
        &args.common,
        &args.mask,
        &Default::default(),
        &Default::default(),
        None,
    )?;
    let docs = load_corpus(&settings)?;
    let stopwords = load_stopwords(&settings)?;

    let results: Vec<Result<Vec<MaskedExample>, Failure>> =
        with_workers(settings.workers, || {
            docs.par_iter()
                .map(|doc| {
                    let pool = build_pool(
                        doc,
                        &stopwords,
                        settings.masking.q_min,
                        settings.masking.t_s,
                    );
                    let mut params = settings.masking.clone();
                    params.seed = stage_seed(doc_seed(settings.seed, doc.id()), STAGE_MASK);
                    sample_masked_examples(doc, &pool, &params)
                        .map_err(|e| failure(doc.id(), "mask", &e))
                })
                .collect()
        })?;

    let mut payload = String::new();
    let mut failures = Vec::new();
    let mut examples = 0usize;
    for result in results {
        match result {
            Ok(exs) => {
                for ex in &exs {
                    payload.push_str(&serde_json::to_string(ex)?);
                    payload.push('\n');
                }
                examples += exs.len();
            }
            Err(f) => failures.push(f),
        }
    }

    match &args.out {
        Some(path) => std::fs::write(path, payload)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(payload.as_bytes())?,
    }
    print_failures(&failures);
    eprintln!(
        "masked {} examples across {} documents ({} failed)",
        examples,
        docs.len() - failures.len(),
        failures.len()
    );
    Ok(if failures.is_empty() { 0 } else { 2 })
}
