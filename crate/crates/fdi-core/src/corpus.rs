//! Corpus ingestion: one JSON object per line with `id`, `title`, `body`.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Document;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
}

impl RawDocument {
    pub fn into_document(self) -> Document {
        Document::new(self.id, &self.title, &self.body)
    }
}

/// Reads a JSONL corpus. Blank lines are skipped; any malformed line or
/// duplicate id aborts with its line number.
pub fn read_corpus<R: Read>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Corpus {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(raw.id.clone()) {
            return Err(Error::Corpus {
                line: i + 1,
                message: format!("duplicate document id `{}`", raw.id),
            });
        }
        docs.push(raw.into_document());
    }
    Ok(docs)
}

pub fn read_corpus_path(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    read_corpus(std::fs::File::open(path)?)
}

/// Writes documents back out in the same JSONL shape.
pub fn write_corpus<W: std::io::Write>(mut w: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        let raw = RawDocument {
            id: d.id().to_owned(),
            title: d.title().to_owned(),
            body: d.body().to_owned(),
        };
        serde_json::to_writer(&mut w, &raw)?;
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_valid_lines() {
        let input = r#"{"id":"a","title":"T","body":"B one."}

{"id":"b","title":"","body":"Second doc."}
"#;
        let docs = read_corpus(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id(), "a");
        assert_eq!(docs[1].text(), "Second doc.");
    }

    #[test]
    fn rejects_malformed_line() {
        let input = "{\"id\":\"a\",\"title\":\"T\",\"body\":\"B\"}\nnot json\n";
        let err = read_corpus(input.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 2, .. }));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let input = "{\"id\":\"a\",\"body\":\"x\"}\n{\"id\":\"a\",\"body\":\"y\"}\n";
        let err = read_corpus(input.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 2, .. }));
    }

    #[test]
    fn round_trips_through_writer() {
        let input = "{\"id\":\"a\",\"title\":\"T\",\"body\":\"B.\"}\n";
        let docs = read_corpus(input.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_corpus(&mut out, &docs).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), input);
    }
}
