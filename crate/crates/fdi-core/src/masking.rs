//! Span selection: which parts of a document get blanked out.
//!
//! Two maskers live here. The concept masker draws whole sentences and
//! concept spans from the candidate pool until enough of the document is
//! covered — that is what fake generation uses. The training masker blanks
//! random sentences, words and short n-grams anywhere in the document, which
//! produces the corpus an infill model is trained on.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::concepts::CandidatePool;
use crate::error::{Error, Result};
use crate::text::{masked_rate, Document, Span, SpanKind};

/// Placeholder vocabulary written into masked text, one per span kind.
pub const MASK_WORD: &str = "[masked_word]";
pub const MASK_NGRAM: &str = "[masked_ngram]";
pub const MASK_SENTENCE: &str = "[masked_sentence]";

impl SpanKind {
    /// The placeholder token standing in for a span of this kind.
    pub fn mask_token(self) -> &'static str {
        match self {
            SpanKind::Word => MASK_WORD,
            SpanKind::Ngram => MASK_NGRAM,
            SpanKind::Sentence => MASK_SENTENCE,
        }
    }
}

/// One blank in a masked document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blank {
    pub span: Span,
    /// Placeholder actually written into the text, e.g. `[masked_ngram]`.
    pub mask: String,
}

impl Blank {
    fn from_span(span: Span) -> Self {
        Blank {
            span,
            mask: span.kind.mask_token().to_owned(),
        }
    }
}

/// A document with blanks plus the ground-truth answers, ready to be
/// serialized as a training pair or handed to the decoder for infilling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub doc_id: String,
    /// Blanks sorted by position; spans never overlap.
    pub blanks: Vec<Blank>,
    /// Original text of each blank, aligned with `blanks`.
    pub answers: Vec<String>,
    /// Seed of the RNG stream that produced this example.
    pub seed: u64,
    /// Set when the candidate pool ran dry before the coverage target was
    /// reached; the example is still usable but under-masked.
    #[serde(default)]
    pub exhausted: bool,
    /// Gap tokens swallowed when close masks were merged. Subtracting this
    /// from the covered token count recovers the coverage the selection
    /// loop actually stopped at.
    #[serde(default)]
    pub absorbed_gap_tokens: usize,
}

impl MaskedExample {
    fn build(
        doc: &Document,
        mut spans: Vec<Span>,
        seed: u64,
        exhausted: bool,
        absorbed_gap_tokens: usize,
    ) -> Self {
        spans.sort_by_key(|s| s.start);
        let answers = spans
            .iter()
            .map(|s| doc.slice(s.start, s.end).to_owned())
            .collect();
        MaskedExample {
            doc_id: doc.id().to_owned(),
            blanks: spans.into_iter().map(Blank::from_span).collect(),
            answers,
            seed,
            exhausted,
            absorbed_gap_tokens,
        }
    }

    pub fn spans(&self) -> Vec<Span> {
        self.blanks.iter().map(|b| b.span).collect()
    }

    pub fn masked_rate(&self, doc: &Document) -> Result<f64> {
        masked_rate(doc, &self.spans())
    }
}

/// Knobs for the concept masker.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskingParams {
    /// Score quantile below which concepts are dropped during extraction.
    pub q_min: f64,
    /// Concept-token ratio for a sentence to enter the pool whole.
    pub t_s: f64,
    /// Per-round probability of drawing a dense sentence.
    pub p_s: f64,
    /// Per-round probability of drawing a concept span.
    pub p_c: f64,
    /// Target fraction of tokens to cover before stopping.
    pub gamma: f64,
    /// How many masked examples to produce per document.
    pub k: usize,
    /// Masks closer than this many tokens apart (same sentence) merge.
    pub merge_gap: usize,
    pub seed: u64,
}

impl Default for MaskingParams {
    fn default() -> Self {
        MaskingParams {
            q_min: 0.4,
            t_s: 0.7,
            p_s: 0.7,
            p_c: 0.5,
            gamma: 0.2,
            k: 3,
            merge_gap: 3,
            seed: 0,
        }
    }
}

impl MaskingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("q_min", self.q_min),
            ("t_s", self.t_s),
            ("p_s", self.p_s),
            ("p_c", self.p_c),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParams(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must be in [0, 1), got {}",
                self.gamma
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws `k` masked examples for one document from its candidate pool.
///
/// Each example uses an independent RNG stream seeded `seed ^ index`.
/// A round of the selection loop first tries a dense sentence (probability
/// `p_s`), then a concept (probability `p_c`); drawn spans overlapping an
/// already selected span are discarded, and the loop exits as soon as the
/// covered fraction reaches `gamma`. The coverage is checked after every
/// accepted draw, so at loop exit the rate never exceeds `gamma` by more
/// than the longest span in the pool; merging close masks afterwards can
/// only add the swallowed gap tokens, reported per example in
/// `absorbed_gap_tokens`.
pub fn sample_masked_examples(
    doc: &Document,
    pool: &CandidatePool,
    params: &MaskingParams,
) -> Result<Vec<MaskedExample>> {
    if pool.is_empty() {
        return Err(Error::NoCandidates {
            doc_id: doc.id().to_owned(),
        });
    }
    let mut out = Vec::with_capacity(params.k);
    for k in 0..params.k {
        let seed = params.seed ^ k as u64;
        out.push(sample_one(doc, pool, params, seed));
    }
    Ok(out)
}

fn sample_one(
    doc: &Document,
    pool: &CandidatePool,
    params: &MaskingParams,
    seed: u64,
) -> MaskedExample {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let total = doc.token_count().max(1) as f64;
    let mut sentences = pool.dense_sentences.clone();
    let mut concepts: Vec<Span> = pool.concepts.iter().map(|c| c.span).collect();
    let mut selected: Vec<Span> = Vec::new();
    let mut covered = 0usize;
    let mut exhausted = false;
    // Rounds with no successful Bernoulli are possible but shrink nothing;
    // bound them so degenerate probabilities cannot spin forever.
    let mut idle_rounds = 0u32;

    loop {
        let before = sentences.len() + concepts.len();

        if !sentences.is_empty() && rng.random_bool(params.p_s) {
            let idx = rng.random_range(0..sentences.len());
            let span = sentences.swap_remove(idx);
            if !selected.iter().any(|s| s.overlaps(&span)) {
                covered += span.len();
                selected.push(span);
            }
        }
        if covered as f64 / total >= params.gamma {
            break;
        }

        if !concepts.is_empty() && rng.random_bool(params.p_c) {
            let idx = rng.random_range(0..concepts.len());
            let span = concepts.swap_remove(idx);
            if !selected.iter().any(|s| s.overlaps(&span)) {
                covered += span.len();
                selected.push(span);
            }
        }
        if covered as f64 / total >= params.gamma {
            break;
        }

        if sentences.is_empty() && concepts.is_empty() {
            exhausted = true;
            break;
        }
        if sentences.len() + concepts.len() == before {
            idle_rounds += 1;
            // With p_s = p_c = 0 this fires immediately; otherwise it is
            // astronomically unlikely to be hit before the pool drains.
            if idle_rounds > 10_000 {
                exhausted = true;
                break;
            }
        } else {
            idle_rounds = 0;
        }
    }

    let merged = merge_close_masks(doc, &selected, params.merge_gap);
    let after: usize = merged.iter().map(Span::len).sum();
    MaskedExample::build(doc, merged, seed, exhausted, after - covered)
}

/// Merges non-sentence masks within the same sentence that are at most
/// `merge_gap` tokens apart (the gap tokens are swallowed). Runs left to
/// right until no pair qualifies; merged spans become n-gram masks.
pub fn merge_close_masks(doc: &Document, spans: &[Span], merge_gap: usize) -> Vec<Span> {
    let mut sorted = spans.to_vec();
    sorted.sort_by_key(|s| s.start);
    let mut out: Vec<Span> = Vec::new();
    for span in sorted {
        if let Some(last) = out.last_mut() {
            let mergeable = last.kind != SpanKind::Sentence
                && span.kind != SpanKind::Sentence
                && span.start.saturating_sub(last.end) <= merge_gap
                && doc.sentence_of(last.end.saturating_sub(1)) == doc.sentence_of(span.start);
            if mergeable {
                *last = Span::ngram(last.start, span.end);
                continue;
            }
        }
        out.push(span);
    }
    out
}

/// Knobs for the training-time random masker.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMaskParams {
    /// Probability a sentence is masked whole.
    pub sentence_prob: f64,
    /// Per-token probability a word blank starts there.
    pub word_prob: f64,
    /// Probability a word blank grows into an n-gram.
    pub ngram_extend_prob: f64,
    /// Center of the acceptable coverage band (informational; the band
    /// below is what is enforced).
    pub target_rate: f64,
    /// Examples outside this coverage band are resampled.
    pub band: (f64, f64),
    /// How many resampling attempts before keeping the last draw anyway.
    pub max_resample: usize,
    pub seed: u64,
}

impl Default for TrainMaskParams {
    fn default() -> Self {
        TrainMaskParams {
            sentence_prob: 0.05,
            word_prob: 0.05,
            ngram_extend_prob: 0.5,
            target_rate: 0.15,
            band: (0.10, 0.20),
            max_resample: 10,
            seed: 0,
        }
    }
}

/// Longest extension, in extra tokens, of a word blank into an n-gram.
const MAX_NGRAM_EXTRA: usize = 4;

/// Masks random spans across the whole document (title included) for
/// training data. Resamples until the covered fraction lands in the band,
/// up to `max_resample` attempts, then keeps the final draw either way.
///
/// Documents with fewer than five tokens cannot meaningfully be masked and
/// are rejected.
pub fn random_mask_training(doc: &Document, params: &TrainMaskParams) -> Result<MaskedExample> {
    if doc.token_count() < 5 {
        return Err(Error::TooShortToMask {
            doc_id: doc.id().to_owned(),
            tokens: doc.token_count(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let total = doc.token_count() as f64;
    let mut spans = Vec::new();
    for _attempt in 0..=params.max_resample {
        spans = draw_training_spans(doc, params, &mut rng);
        let covered: usize = spans.iter().map(Span::len).sum();
        let rate = covered as f64 / total;
        if rate >= params.band.0 && rate <= params.band.1 {
            break;
        }
    }
    Ok(MaskedExample::build(doc, spans, params.seed, false, 0))
}

fn draw_training_spans(
    doc: &Document,
    params: &TrainMaskParams,
    rng: &mut ChaCha12Rng,
) -> Vec<Span> {
    let mut spans = Vec::new();
    for &(s, e) in doc.sentences() {
        if rng.random_bool(params.sentence_prob) {
            spans.push(Span::sentence(s, e));
            continue;
        }
        let mut i = s;
        while i < e {
            if !rng.random_bool(params.word_prob) {
                i += 1;
                continue;
            }
            if rng.random_bool(params.ngram_extend_prob) {
                let extra = rng.random_range(1..=MAX_NGRAM_EXTRA);
                let end = (i + 1 + extra).min(e);
                spans.push(Span::ngram(i, end));
                i = end;
            } else {
                spans.push(Span::word(i));
                i += 1;
            }
        }
    }
    spans
}
