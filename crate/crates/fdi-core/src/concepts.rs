//! Concept extraction: split documents into content-word runs, score them by
//! word co-occurrence, and filter down to the spans worth masking.
//!
//! The pipeline for one document is
//!
//! 1. split token runs between stopwords/delimiters/sentence boundaries,
//! 2. score every run from word degree/frequency statistics,
//! 3. drop runs below a score quantile,
//! 4. drop runs that appear in the protected head,
//! 5. attach a leading determiner to the survivors,
//! 6. collect sentences dense in concept tokens.
//!
//! Steps 1-6 feed the masking sampler; the same data doubles as an audit
//! report of what was kept and why.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::text::{Document, Span, SpanKind, StopwordSet};

/// Determiners that get absorbed into a following concept span.
const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "its", "their", "our", "his", "her",
];

/// A candidate concept: a token span plus its surface text and score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub span: Span,
    pub surface: String,
    pub score: f64,
}

/// Why a concept was kept or dropped during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptStatus {
    Kept,
    DroppedQuantile,
    DroppedHead,
}

/// One row of the extraction audit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub kind: SpanKind,
    pub score: f64,
    pub status: ConceptStatus,
}

/// Everything the masking sampler draws from: filtered concept spans and
/// the sentences dense enough in concept tokens to be masked whole.
#[derive(Debug, Clone, Default)]
pub struct CandidatePool {
    pub concepts: Vec<Concept>,
    pub dense_sentences: Vec<Span>,
}

impl CandidatePool {
    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty() && self.dense_sentences.is_empty()
    }

    /// Length of the longest span in the pool, in tokens.
    pub fn longest_span(&self) -> usize {
        self.concepts
            .iter()
            .map(|c| c.span.len())
            .chain(self.dense_sentences.iter().map(Span::len))
            .max()
            .unwrap_or(0)
    }
}

/// Maximal runs of non-stopword, non-delimiter tokens within a sentence.
/// Runs never cross sentence boundaries.
pub fn split_concepts(doc: &Document, stopwords: &StopwordSet) -> Vec<Concept> {
    let tokens = doc.tokens();
    let mut out = Vec::new();
    for &(s, e) in doc.sentences() {
        let mut run_start = None;
        for i in s..e {
            if stopwords.breaks_run(&tokens[i].surface) {
                if let Some(rs) = run_start.take() {
                    out.push(make_concept(doc, rs, i));
                }
            } else if run_start.is_none() {
                run_start = Some(i);
            }
        }
        if let Some(rs) = run_start {
            out.push(make_concept(doc, rs, e));
        }
    }
    out
}

fn make_concept(doc: &Document, start: usize, end: usize) -> Concept {
    Concept {
        span: Span::ngram(start, end),
        surface: doc.slice(start, end).to_owned(),
        score: 0.0,
    }
}

/// Lowercased member words of a concept.
fn member_words(doc: &Document, c: &Concept) -> Vec<String> {
    doc.tokens()[c.span.start..c.span.end]
        .iter()
        .map(|t| t.surface.to_lowercase())
        .collect()
}

/// Scores concepts in place from word statistics over all occurrences:
/// freq(w) counts occurrences containing w, deg(w) sums the lengths of
/// those occurrences (a word co-occurs with itself), and a concept scores
/// the sum of deg(w)/freq(w) over its member words.
///
/// A word appearing only alone scores 1.0; a single occurrence of an
/// isolated n-word concept scores n^2.
pub fn apply_scores(doc: &Document, concepts: &mut [Concept]) {
    let mut freq: HashMap<String, f64> = HashMap::new();
    let mut deg: HashMap<String, f64> = HashMap::new();
    for c in concepts.iter() {
        let words = member_words(doc, c);
        let len = words.len() as f64;
        let distinct: HashSet<&String> = words.iter().collect();
        for w in distinct {
            *freq.entry(w.clone()).or_default() += 1.0;
            *deg.entry(w.clone()).or_default() += len;
        }
    }
    for c in concepts.iter_mut() {
        c.score = member_words(doc, c)
            .iter()
            .map(|w| deg[w] / freq[w])
            .sum();
    }
}

/// Score at the nearest-rank `q` quantile: the `ceil(q*n)`-th smallest.
/// With `q = 0` nothing is filtered.
pub fn quantile_threshold(scores: &[f64], q: f64) -> f64 {
    let n = scores.len();
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    // Small epsilon so q*n that is mathematically integral doesn't get
    // ceil'd one rank too high by float noise.
    let rank = ((q * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if rank == 0 {
        return f64::NEG_INFINITY;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[rank.min(n) - 1]
}

/// Drops concepts scoring strictly below the `q` quantile of the scores.
pub fn filter_by_quantile(concepts: &mut Vec<Concept>, q: f64) {
    let scores: Vec<f64> = concepts.iter().map(|c| c.score).collect();
    let threshold = quantile_threshold(&scores, q);
    concepts.retain(|c| c.score >= threshold);
}

/// True if the concept starts inside the protected head, or its word
/// sequence occurs anywhere in the head (case-insensitive).
fn in_head(doc: &Document, head_words: &[String], c: &Concept) -> bool {
    if c.span.start < doc.head_end() {
        return true;
    }
    let member = member_words(doc, c);
    if member.is_empty() || member.len() > head_words.len() {
        return false;
    }
    head_words.windows(member.len()).any(|w| w == member)
}

/// Absorbs a determiner token directly before the span, provided it stays
/// outside the protected head.
fn concat_determiner(doc: &Document, c: &mut Concept) {
    let s = c.span.start;
    if s == 0 || s - 1 < doc.head_end() {
        return;
    }
    let prev = doc.tokens()[s - 1].surface.to_lowercase();
    if DETERMINERS.contains(&prev.as_str()) {
        c.span = Span::ngram(s - 1, c.span.end);
        c.surface = doc.slice(c.span.start, c.span.end).to_owned();
    }
}

/// Sentences (beyond the head) where at least `t_s` of the tokens belong to
/// kept concept spans.
fn dense_sentences(doc: &Document, concepts: &[Concept], t_s: f64) -> Vec<Span> {
    let mut covered = vec![false; doc.token_count()];
    for c in concepts {
        for slot in &mut covered[c.span.start..c.span.end] {
            *slot = true;
        }
    }
    doc.sentences()
        .iter()
        .filter(|&&(s, e)| {
            s >= doc.head_end()
                && e > s
                && covered[s..e].iter().filter(|&&b| b).count() as f64 + 1e-12
                    >= t_s * (e - s) as f64
        })
        .map(|&(s, e)| Span::sentence(s, e))
        .collect()
}

/// Output of [`extract`]: the sampling pool plus the per-concept audit trail.
#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub pool: CandidatePool,
    pub report: Vec<ConceptRecord>,
}

/// Runs the full extraction pipeline for one document.
///
/// `q_min` is the score quantile below which concepts are dropped; `t_s` is
/// the concept-token ratio above which a sentence joins the pool whole.
pub fn extract(doc: &Document, stopwords: &StopwordSet, q_min: f64, t_s: f64) -> Extraction {
    let mut concepts = split_concepts(doc, stopwords);
    apply_scores(doc, &mut concepts);

    let scores: Vec<f64> = concepts.iter().map(|c| c.score).collect();
    let threshold = quantile_threshold(&scores, q_min);

    let head_words: Vec<String> = doc.tokens()[..doc.head_end()]
        .iter()
        .map(|t| t.surface.to_lowercase())
        .collect();

    let mut report = Vec::with_capacity(concepts.len());
    let mut kept = Vec::new();
    for c in concepts {
        let status = if c.score < threshold {
            ConceptStatus::DroppedQuantile
        } else if in_head(doc, &head_words, &c) {
            ConceptStatus::DroppedHead
        } else {
            ConceptStatus::Kept
        };
        let mut record_concept = c.clone();
        if status == ConceptStatus::Kept {
            concat_determiner(doc, &mut record_concept);
            kept.push(record_concept.clone());
        }
        report.push(ConceptRecord {
            surface: record_concept.surface,
            start: record_concept.span.start,
            end: record_concept.span.end,
            kind: record_concept.span.kind,
            score: record_concept.score,
            status,
        });
    }

    let dense = dense_sentences(doc, &kept, t_s);
    Extraction {
        pool: CandidatePool {
            concepts: kept,
            dense_sentences: dense,
        },
        report,
    }
}

/// Convenience wrapper when only the sampling pool is needed.
pub fn build_pool(doc: &Document, stopwords: &StopwordSet, q_min: f64, t_s: f64) -> CandidatePool {
    extract(doc, stopwords, q_min, t_s).pool
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(body: &str) -> Document {
        Document::new("t", "", body)
    }

    #[test]
    fn splits_on_stopwords_and_delimiters() {
        let d = doc("deep learning and graph networks, information retrieval");
        let stop = StopwordSet::new(["and"]);
        let got: Vec<String> = split_concepts(&d, &stop)
            .into_iter()
            .map(|c| c.surface)
            .collect();
        assert_eq!(
            got,
            ["deep learning", "graph networks", "information retrieval"]
        );
    }

    #[test]
    fn runs_stop_at_sentence_boundaries() {
        let d = doc("deep learning. Graph networks");
        let stop = StopwordSet::new(["and"]);
        let got: Vec<String> = split_concepts(&d, &stop)
            .into_iter()
            .map(|c| c.surface)
            .collect();
        // The period is a delimiter anyway, but a boundary with no delimiter
        // token must also split; this layout exercises both.
        assert_eq!(got, ["deep learning", "Graph networks"]);
    }

    #[test]
    fn all_stopword_text_yields_nothing() {
        let d = doc("the of and the");
        let stop = StopwordSet::new(["the", "of", "and"]);
        assert!(split_concepts(&d, &stop).is_empty());
    }

    #[test]
    fn scores_match_hand_computation() {
        // Occurrences: {deep learning}, {deep learning}, {deep}, {graph}.
        // freq(deep)=3 deg(deep)=2+2+1=5; freq(learning)=2 deg(learning)=4;
        // freq(graph)=1 deg(graph)=1.
        let d = doc("deep learning and deep learning and deep and graph");
        let stop = StopwordSet::new(["and"]);
        let mut cs = split_concepts(&d, &stop);
        apply_scores(&d, &mut cs);
        let score_of = |s: &str| cs.iter().find(|c| c.surface == s).unwrap().score;
        assert_eq!(score_of("deep learning"), 5.0 / 3.0 + 2.0);
        assert_eq!(score_of("deep"), 5.0 / 3.0);
        assert_eq!(score_of("graph"), 1.0);
    }

    #[test]
    fn lone_word_scores_one_and_isolated_ngram_squares() {
        let d = doc("solo and sparse matrix factorization");
        let stop = StopwordSet::new(["and"]);
        let mut cs = split_concepts(&d, &stop);
        apply_scores(&d, &mut cs);
        assert_eq!(cs[0].score, 1.0);
        assert_eq!(cs[1].score, 9.0);
    }

    #[test]
    fn quantile_nearest_rank() {
        let scores = [1.0, 5.0, 2.0, 9.0, 4.0];
        // q=0.4, n=5 -> rank ceil(2.0)=2 -> second smallest.
        assert_eq!(quantile_threshold(&scores, 0.4), 2.0);
        assert_eq!(quantile_threshold(&scores, 0.0), f64::NEG_INFINITY);
        assert_eq!(quantile_threshold(&scores, 1.0), 9.0);
        assert_eq!(quantile_threshold(&[], 0.4), f64::NEG_INFINITY);
    }

    #[test]
    fn quantile_filter_keeps_at_least_threshold() {
        let mut cs: Vec<Concept> = [1.0, 5.0, 2.0, 9.0, 4.0]
            .iter()
            .enumerate()
            .map(|(i, &s)| Concept {
                span: Span::word(i),
                surface: format!("c{i}"),
                score: s,
            })
            .collect();
        filter_by_quantile(&mut cs, 0.4);
        let kept: Vec<f64> = cs.iter().map(|c| c.score).collect();
        assert_eq!(kept, [5.0, 2.0, 9.0, 4.0]);
    }

    #[test]
    fn quantile_filter_all_ties_keeps_all() {
        let mut cs: Vec<Concept> = (0..4)
            .map(|i| Concept {
                span: Span::word(i),
                surface: format!("c{i}"),
                score: 3.0,
            })
            .collect();
        filter_by_quantile(&mut cs, 0.4);
        assert_eq!(cs.len(), 4);
    }

    #[test]
    fn head_occurrences_are_dropped() {
        let d = Document::new(
            "t",
            "Spectral Clustering Methods",
            "We develop tools here. We revisit the spectral clustering and novel approaches.",
        );
        let stop = StopwordSet::default_english();
        let ex = extract(&d, &stop, 0.0, 0.7);
        let kept: Vec<&str> = ex.pool.concepts.iter().map(|c| c.surface.as_str()).collect();
        // "spectral clustering" re-occurs beyond the head but matches the
        // title word-for-word, so it is dropped; "novel approaches" stays.
        assert!(!kept.iter().any(|s| s.to_lowercase().contains("spectral")));
        assert!(kept.contains(&"novel approaches"));
        assert!(ex
            .report
            .iter()
            .any(|r| r.status == ConceptStatus::DroppedHead));
    }

    #[test]
    fn determiner_attaches_outside_head() {
        let d = Document::new(
            "t",
            "Title Words",
            "Heads stay intact. We propose the whole dictionary for lookup.",
        );
        let stop = StopwordSet::default_english();
        let ex = extract(&d, &stop, 0.0, 0.7);
        let kept: Vec<&str> = ex.pool.concepts.iter().map(|c| c.surface.as_str()).collect();
        assert!(kept.contains(&"the whole dictionary"), "kept: {kept:?}");
        let c = ex
            .pool
            .concepts
            .iter()
            .find(|c| c.surface == "the whole dictionary")
            .unwrap();
        assert_eq!(c.span.kind, SpanKind::Ngram);
        assert_eq!(c.span.len(), 3);
    }

    #[test]
    fn dense_sentence_threshold_is_inclusive() {
        // Body sentence 2 has 10 tokens of which 7 are concept tokens:
        // ratio exactly 0.7 -> selected.
        let d = Document::new(
            "t",
            "",
            "Intro words only here. Sparse coding helps dictionary learning of and big signals now",
        );
        let stop = StopwordSet::default_english();
        let ex = extract(&d, &stop, 0.0, 0.7);
        let sent = d.sentences()[1];
        let covered: usize = ex.pool.concepts.iter().map(|c| c.span.len()).sum();
        assert_eq!(covered, 7, "fixture drifted: {:?}", ex.pool.concepts);
        assert_eq!(sent.1 - sent.0, 10);
        assert_eq!(ex.pool.dense_sentences, vec![Span::sentence(sent.0, sent.1)]);
    }

    #[test]
    fn empty_document_extracts_nothing() {
        let d = doc("");
        let stop = StopwordSet::default_english();
        let ex = extract(&d, &stop, 0.4, 0.7);
        assert!(ex.pool.is_empty());
        assert!(ex.report.is_empty());
    }
}
