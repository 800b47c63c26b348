//! The six subcommands plus the small amount of plumbing they share.

pub mod extract;
pub mod generate;
pub mod mask;
pub mod metrics;
pub mod quiz;
pub mod traindata;

use anyhow::{Context, Result};

use fdi_core::text::{Document, StopwordSet};

use crate::config::Settings;
use crate::manifest::Failure;

/// Loads the corpus and sorts by document id, so processing order (and
/// with it every output stream) is independent of file order and thread
/// scheduling.
pub fn load_corpus(settings: &Settings) -> Result<Vec<Document>> {
    let mut docs = fdi_core::corpus::read_corpus_path(&settings.corpus)
        .with_context(|| format!("reading corpus {}", settings.corpus.display()))?;
    docs.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(docs)
}

pub fn load_stopwords(settings: &Settings) -> Result<StopwordSet> {
    match &settings.stopwords {
        Some(path) => StopwordSet::from_file(path)
            .with_context(|| format!("reading stopwords {}", path.display())),
        None => Ok(StopwordSet::default_english()),
    }
}

/// Runs `f` inside a rayon pool of the configured size; with no explicit
/// worker count the global pool (one thread per core) is used.
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    match workers {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building worker pool")?
            .install(f)),
        None => Ok(f()),
    }
}

/// Records a per-document failure and keeps the batch going.
pub fn failure(doc_id: &str, stage: &str, err: &fdi_core::Error) -> Failure {
    Failure {
        doc_id: doc_id.to_owned(),
        stage: stage.to_owned(),
        message: err.to_string(),
    }
}

/// True when the error chain bottoms out in a transport failure talking to
/// the remote backend — those abort the run (exit code 3) instead of being
/// recorded as per-document failures.
pub fn is_backend_unreachable(err: &fdi_core::Error) -> bool {
    match err {
        fdi_core::Error::RemoteTransport { .. } => true,
        fdi_core::Error::Backend { source, .. } => is_backend_unreachable(source),
        _ => false,
    }
}

pub fn print_failures(failures: &[Failure]) {
    for f in failures {
        eprintln!("warning: document `{}` failed during {}: {}", f.doc_id, f.stage, f.message);
    }
}

/// Serializes one record per line (JSONL).
pub fn jsonl<T: serde::Serialize>(records: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.push(b'\n');
    }
    Ok(out)
}
