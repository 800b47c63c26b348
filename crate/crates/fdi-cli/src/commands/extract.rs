//! `fdi extract` — run concept scoring and selection, and write the audit
//! report: every concept with its span, score, and kept/dropped status.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use fdi_core::concepts::{self, ConceptRecord};

use crate::commands::{load_corpus, load_stopwords, with_workers};
use crate::config::{CommonFlags, MaskFlags, Settings};

#[derive(clap::Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: CommonFlags,
    /// Score quantile below which concepts are dropped.
    #[arg(long = "q-min")]
    pub q_min: Option<f64>,
    /// Concept-token ratio for a sentence to count as dense.
    #[arg(long)]
    pub ts: Option<f64>,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExtractLine {
    doc_id: String,
    /// Sentence spans dense enough to be masked whole, as (start, end)
    /// token ranges.
    dense_sentences: Vec<(usize, usize)>,
    concepts: Vec<ConceptRecord>,
}

pub fn run(args: &ExtractArgs) -> Result<u8> {
    let mask_flags = MaskFlags {
        q_min: args.q_min,
        ts: args.ts,
        ..MaskFlags::default()
    };
    let settings = Settings::resolve(
        &args.common,
        &mask_flags,
        &Default::default(),
        &Default::default(),
        None,
    )?;
    let docs = load_corpus(&settings)?;
    let stopwords = load_stopwords(&settings)?;

    let q_min = settings.masking.q_min;
    let t_s = settings.masking.t_s;
    let lines: Vec<String> = with_workers(settings.workers, || {
        docs.par_iter()
            .map(|doc| {
                let extraction = concepts::extract(doc, &stopwords, q_min, t_s);
                let line = ExtractLine {
                    doc_id: doc.id().to_owned(),
                    dense_sentences: extraction
                        .pool
                        .dense_sentences
                        .iter()
                        .map(|s| (s.start, s.end))
                        .collect(),
                    concepts: extraction.report,
                };
                serde_json::to_string(&line).expect("report serializes")
            })
            .collect()
    })?;

    let mut payload = lines.join("\n");
    if !payload.is_empty() {
        payload.push('\n');
    }
    match &args.out {
        Some(path) => std::fs::write(path, payload)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(payload.as_bytes())?,
    }
    eprintln!("extracted concepts for {} documents", docs.len());
    Ok(0)
}
