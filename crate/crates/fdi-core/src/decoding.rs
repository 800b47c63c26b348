//! Penalized decoding: turn a masked example into a fake document.
//!
//! For each blank, the backend scores the next token; scores of tokens that
//! appear in the original answers are divided by a penalty before the
//! softmax, steering generation *away* from the truth; then nucleus
//! (top-p) sampling picks a token. Answers close with the `[ans]` marker or
//! a per-kind length budget. The generated answers replace the original
//! spans in the document text, leaving everything else byte-identical.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::backends::InfillBackend;
use crate::concepts::CandidatePool;
use crate::error::{Error, Result};
use crate::masking::{sample_masked_examples, MaskedExample, MaskingParams};
use crate::pairs::context_tokens;
use crate::text::{tokenize, Document, SpanKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodingParams {
    /// Softmax temperature, > 0.
    pub temperature: f64,
    /// Score divisor for penalized tokens, >= 1. At 1.0 the penalty is off.
    pub delta: f64,
    /// Nucleus mass for top-p sampling, in (0, 1].
    pub top_p: f64,
    /// Answer-derived tokens shorter than this many chars are not penalized
    /// (articles and the like carry no content worth steering away from).
    pub min_penalty_token_chars: usize,
    /// Token budget for word/n-gram blanks before force-closing.
    pub max_span_answer_tokens: usize,
    /// Token budget for sentence blanks before force-closing.
    pub max_sentence_answer_tokens: usize,
    /// How many times to resample an answer that equals the original.
    pub strict_fake_retries: u32,
    pub seed: u64,
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams {
            temperature: 1.0,
            delta: 1.2,
            top_p: 0.95,
            min_penalty_token_chars: 4,
            max_span_answer_tokens: 8,
            max_sentence_answer_tokens: 40,
            strict_fake_retries: 3,
            seed: 0,
        }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidParams(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if !(self.delta >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta must be >= 1, got {}",
                self.delta
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_span_answer_tokens == 0 || self.max_sentence_answer_tokens == 0 {
            return Err(Error::InvalidParams("answer budgets must be >= 1".into()));
        }
        Ok(())
    }
}

/// Vocabulary ids to penalize: every token of every original answer with at
/// least `min_chars` characters, matched case-insensitively.
pub fn build_penalty_set(
    answers: &[String],
    min_chars: usize,
    vocab: &crate::backends::Vocabulary,
) -> HashSet<u32> {
    let mut folded: HashSet<String> = HashSet::new();
    for ans in answers {
        for tok in tokenize(ans) {
            if tok.surface.chars().count() >= min_chars {
                folded.insert(tok.surface.to_lowercase());
            }
        }
    }
    vocab
        .tokens()
        .iter()
        .enumerate()
        .filter(|(_, t)| folded.contains(&t.to_lowercase()))
        .map(|(i, _)| i as u32)
        .collect()
}

/// Softmax over `scores / temperature`, except that scores of ids in
/// `penalized` are divided by `delta` first. Requires finite scores;
/// computed max-shifted for stability. The result sums to 1.
pub fn penalized_distribution(
    scores: &[f64],
    temperature: f64,
    delta: f64,
    penalized: &HashSet<u32>,
) -> Result<Vec<f64>> {
    debug_assert!(temperature > 0.0 && delta >= 1.0);
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::NonFiniteScore(i));
        }
    }
    let logits: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let d = if penalized.contains(&(i as u32)) {
                delta
            } else {
                1.0
            };
            z / (temperature * d)
        })
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Samples an index from the smallest probability-descending prefix whose
/// cumulative mass reaches `top_p`, renormalized. Ties in probability break
/// toward the lower index; with `top_p = 1` the nucleus is everything.
pub fn top_p_sample<R: Rng>(probs: &[f64], top_p: f64, rng: &mut R) -> usize {
    debug_assert!(!probs.is_empty());
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut cut = order.len();
    let mut mass = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        mass += probs[i];
        // Tiny tolerance so cumulative rounding cannot exclude the last
        // member of an exactly-p nucleus.
        if mass >= top_p - 1e-9 {
            cut = rank + 1;
            break;
        }
    }
    let u: f64 = rng.random::<f64>() * mass;
    let mut acc = 0.0;
    for &i in &order[..cut] {
        acc += probs[i];
        if u < acc {
            return i;
        }
    }
    order[cut - 1]
}

/// One generated replacement for a blank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub blank_index: usize,
    pub original: String,
    pub generated: String,
}

/// A fully assembled fake document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FakeDocument {
    pub doc_id: String,
    pub fake_id: String,
    /// Document text with every blank replaced by generated content; all
    /// bytes outside the blanks, the protected head included, are intact.
    pub text: String,
    pub replacements: Vec<Replacement>,
    /// Seed of the decoding RNG stream for this fake.
    pub seed: u64,
    /// Seed of the masked example this fake was built from.
    pub example_seed: u64,
}

/// Infills one masked example into a fake document.
///
/// The conditioning context is the masked token stream; each generated
/// answer token is appended to the context so later blanks see earlier
/// fakes, mirroring how the training pairs are laid out. An answer equal to
/// the original (case-folded, whitespace-normalized) is resampled up to
/// `strict_fake_retries` times; the last attempt is kept either way.
pub fn infill_example(
    doc: &Document,
    example: &MaskedExample,
    backend: &dyn InfillBackend,
    params: &DecodingParams,
) -> Result<FakeDocument> {
    params.validate()?;
    let vocab = backend.vocabulary();
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let penalized = build_penalty_set(&example.answers, params.min_penalty_token_chars, vocab);
    let mut context: Vec<u32> =
        vocab.encode(context_tokens(doc, example).iter().map(String::as_str));

    let mut replacements = Vec::with_capacity(example.blanks.len());
    for (bi, blank) in example.blanks.iter().enumerate() {
        let budget = match blank.span.kind {
            SpanKind::Sentence => params.max_sentence_answer_tokens,
            _ => params.max_span_answer_tokens,
        };
        let checkpoint = context.len();
        let original = &example.answers[bi];
        let mut attempt = 0;
        let generated = loop {
            context.truncate(checkpoint);
            let toks = generate_answer(&mut context, backend, params, &penalized, budget, &mut rng)
                .map_err(|e| Error::Backend {
                    blank: bi,
                    source: Box::new(e),
                })?;
            let text = join_tokens(&toks);
            if attempt >= params.strict_fake_retries || !same_text(&text, original) {
                break text;
            }
            attempt += 1;
        };
        replacements.push(Replacement {
            blank_index: bi,
            original: original.clone(),
            generated,
        });
    }

    Ok(FakeDocument {
        doc_id: doc.id().to_owned(),
        fake_id: format!("{}-fake", doc.id()),
        text: assemble(doc, example, &replacements),
        replacements,
        seed: params.seed,
        example_seed: example.seed,
    })
}

/// Samples tokens for one blank until `[ans]` or the budget closes it.
/// Pushes sampled tokens (and the closing `[ans]`) onto the context.
fn generate_answer(
    context: &mut Vec<u32>,
    backend: &dyn InfillBackend,
    params: &DecodingParams,
    penalized: &HashSet<u32>,
    budget: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<String>> {
    let vocab = backend.vocabulary();
    let specials = vocab.specials();
    let mut toks = Vec::new();
    loop {
        if toks.len() >= budget {
            context.push(specials.ans);
            return Ok(toks);
        }
        let mut scores = backend.score_next(context)?;
        if scores.len() != vocab.len() {
            return Err(Error::VocabularyMismatch {
                expected: vocab.len(),
                got: scores.len(),
            });
        }
        // Structural tokens must never appear inside an answer: push them
        // far below the minimum so sampling cannot reach them.
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        for id in specials.structural() {
            scores[id as usize] = min - 50.0;
        }
        let probs = penalized_distribution(&scores, params.temperature, params.delta, penalized)?;
        let id = top_p_sample(&probs, params.top_p, rng) as u32;
        if id == specials.ans {
            context.push(id);
            return Ok(toks);
        }
        context.push(id);
        toks.push(vocab.token(id).to_owned());
    }
}

/// Joins generated tokens with single spaces, swallowing the space before
/// closing punctuation and after opening brackets.
pub fn join_tokens(tokens: &[String]) -> String {
    const NO_SPACE_BEFORE: &[&str] = &[".", ",", ";", ":", "!", "?", ")", "]", "}", "%", "'"];
    const NO_SPACE_AFTER: &[&str] = &["(", "[", "{", "$"];
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for t in tokens {
        let t = t.as_str();
        if let Some(p) = prev {
            if !NO_SPACE_BEFORE.contains(&t) && !NO_SPACE_AFTER.contains(&p) {
                out.push(' ');
            }
        }
        out.push_str(t);
        prev = Some(t);
    }
    out
}

fn same_text(a: &str, b: &str) -> bool {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    norm(a) == norm(b)
}

/// Splices generated answers into the original text, back to front so byte
/// offsets stay valid. Everything outside the blank spans is untouched.
fn assemble(doc: &Document, example: &MaskedExample, replacements: &[Replacement]) -> String {
    let mut text = doc.text().to_owned();
    for (blank, rep) in example.blanks.iter().zip(replacements).rev() {
        let start = doc.tokens()[blank.span.start].start;
        let end = doc.tokens()[blank.span.end - 1].end;
        text.replace_range(start..end, &rep.generated);
    }
    text
}

/// Masks a document `k` ways and infills `num_fakes` fakes, cycling over
/// the masked examples and giving each fake its own decoding stream
/// (`seed ^ fake_index`).
pub fn generate_fakes(
    doc: &Document,
    pool: &CandidatePool,
    backend: &dyn InfillBackend,
    masking: &MaskingParams,
    decoding: &DecodingParams,
    num_fakes: usize,
) -> Result<Vec<FakeDocument>> {
    let examples = sample_masked_examples(doc, pool, masking)?;
    let mut fakes = Vec::with_capacity(num_fakes);
    for j in 0..num_fakes {
        let example = &examples[j % examples.len()];
        let mut per_fake = decoding.clone();
        per_fake.seed = decoding.seed ^ j as u64;
        let mut fake = infill_example(doc, example, backend, &per_fake)?;
        fake.fake_id = format!("{}-f{j:03}", doc.id());
        fakes.push(fake);
    }
    Ok(fakes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{NGramModel, Vocabulary};
    use crate::masking::Blank;
    use crate::text::Span;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn penalty_divides_logits() {
        // z = [2, 0], penalty on token 0 with delta = 1.2:
        // p0 = e^(2/1.2) / (e^(2/1.2) + 1).
        let penalized: HashSet<u32> = [0].into_iter().collect();
        let p = penalized_distribution(&[2.0, 0.0], 1.0, 1.2, &penalized).unwrap();
        let expect = (2.0f64 / 1.2).exp() / ((2.0f64 / 1.2).exp() + 1.0);
        assert!(approx(p[0], expect, 1e-12));
        assert!(approx(p[0], 0.8411, 1e-4));
        // Unpenalized for contrast.
        let q = penalized_distribution(&[2.0, 0.0], 1.0, 1.2, &HashSet::new()).unwrap();
        assert!(approx(q[0], 0.8808, 1e-4));
        assert!(p[0] < q[0]);
    }

    #[test]
    fn delta_one_is_plain_softmax() {
        let penalized: HashSet<u32> = [0, 2].into_iter().collect();
        let z = [0.3, -1.2, 2.4, 0.0];
        let with = penalized_distribution(&z, 0.7, 1.0, &penalized).unwrap();
        let without = penalized_distribution(&z, 0.7, 1.0, &HashSet::new()).unwrap();
        for (a, b) in with.iter().zip(&without) {
            assert!(approx(*a, *b, 1e-15));
        }
        assert!(approx(with.iter().sum::<f64>(), 1.0, 1e-12));
    }

    #[test]
    fn non_finite_scores_are_rejected() {
        let err = penalized_distribution(&[1.0, f64::NAN], 1.0, 1.2, &HashSet::new()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteScore(1)));
        assert!(penalized_distribution(&[f64::INFINITY, 0.0], 1.0, 1.2, &HashSet::new()).is_err());
    }

    #[test]
    fn nucleus_excludes_the_tail() {
        // cum: .5, .8, .95 -> nucleus is {0, 1, 2}; 3 must never appear.
        let probs = [0.5, 0.3, 0.15, 0.05];
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut seen = [0usize; 4];
        for _ in 0..5000 {
            seen[top_p_sample(&probs, 0.95, &mut rng)] += 1;
        }
        assert_eq!(seen[3], 0);
        assert!(seen[0] > 0 && seen[1] > 0 && seen[2] > 0);
    }

    #[test]
    fn nucleus_one_covers_everything() {
        let probs = [0.4, 0.3, 0.2, 0.1];
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut seen = [0usize; 4];
        for _ in 0..20000 {
            seen[top_p_sample(&probs, 1.0, &mut rng)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 0));
    }

    #[test]
    fn one_hot_always_wins() {
        let probs = [0.0, 1.0, 0.0];
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(top_p_sample(&probs, 0.95, &mut rng), 1);
        }
    }

    #[test]
    fn penalty_set_folds_case_and_skips_short_tokens() {
        let vocab = Vocabulary::build(["Solution", "solution", "the", "approximate"]);
        let answers = vec!["an Approximate solution".to_owned()];
        let set = build_penalty_set(&answers, 4, &vocab);
        // "an" is too short; both casings of "solution" are caught.
        assert!(set.contains(&vocab.id_of("Solution").unwrap()));
        assert!(set.contains(&vocab.id_of("solution").unwrap()));
        assert!(set.contains(&vocab.id_of("approximate").unwrap()));
        assert!(!set.contains(&vocab.id_of("the").unwrap()));
        assert_eq!(set.len(), 3);
    }

    fn tiny_doc_and_example() -> (Document, MaskedExample) {
        let doc = Document::new(
            "d1",
            "Anchor Title",
            "The anchor sentence stays. Sparse coding helps recovery today.",
        );
        // Mask "coding helps" (tokens: The anchor ... => find indices).
        // Tokens: Anchor(0) Title(1) The(2) anchor(3) sentence(4) stays(5)
        // .(6) Sparse(7) coding(8) helps(9) recovery(10) today(11) .(12)
        let span = Span::ngram(8, 10);
        let ex = MaskedExample {
            doc_id: "d1".into(),
            blanks: vec![Blank {
                span,
                mask: span.kind.mask_token().to_owned(),
            }],
            answers: vec![doc.slice(8, 10).to_owned()],
            seed: 5,
            exhausted: false,
            absorbed_gap_tokens: 0,
        };
        (doc, ex)
    }

    fn train_backend() -> NGramModel {
        let lines = [
            "Sparse [masked_ngram] recovery today. [sep] dictionary methods [ans]",
            "Sparse [masked_ngram] recovery today. [sep] greedy pursuit [ans]",
            "Dense [masked_word] blanks. [sep] random [ans]",
            "Atoms compose the [masked_word]. [sep] dictionary [ans]",
        ];
        NGramModel::train(lines, 3, 0.05).unwrap()
    }

    #[test]
    fn infill_replaces_only_the_blank() {
        let (doc, ex) = tiny_doc_and_example();
        let backend = train_backend();
        let fake = infill_example(&doc, &ex, &backend, &DecodingParams::default()).unwrap();
        assert_eq!(fake.doc_id, "d1");
        assert_eq!(fake.replacements.len(), 1);
        assert!(fake.text.starts_with(doc.head_text()));
        // Text outside the blank is intact.
        assert!(fake.text.starts_with("Anchor Title\nThe anchor sentence stays. Sparse "));
        assert!(fake.text.ends_with(" recovery today."));
        assert!(!fake.replacements[0].generated.contains("[ans]"));
        assert!(!fake.replacements[0].generated.contains("[sep]"));
    }

    #[test]
    fn infill_is_deterministic_per_seed() {
        let (doc, ex) = tiny_doc_and_example();
        let backend = train_backend();
        let p = DecodingParams {
            seed: 77,
            ..DecodingParams::default()
        };
        let a = infill_example(&doc, &ex, &backend, &p).unwrap();
        let b = infill_example(&doc, &ex, &backend, &p).unwrap();
        assert_eq!(a, b);
        let q = DecodingParams {
            seed: 78,
            ..DecodingParams::default()
        };
        let c = infill_example(&doc, &ex, &backend, &q).unwrap();
        assert_eq!(c.seed, 78);
        // Streams differ; text may or may not, so only check the seeds.
        assert_ne!(a.seed, c.seed);
    }

    #[test]
    fn budget_force_closes_answers() {
        let (doc, ex) = tiny_doc_and_example();
        let backend = train_backend();
        let p = DecodingParams {
            max_span_answer_tokens: 2,
            ..DecodingParams::default()
        };
        for seed in 0..20 {
            let mut p = p.clone();
            p.seed = seed;
            let fake = infill_example(&doc, &ex, &backend, &p).unwrap();
            // Each whitespace chunk contains at least one sampled token, so
            // the chunk count bounds the sampled-token count from below.
            let chunks = fake.replacements[0].generated.split_whitespace().count();
            assert!(chunks <= 2, "generated: {:?}", fake.replacements[0].generated);
        }
    }

    #[test]
    fn zero_blanks_reproduce_the_document() {
        let doc = Document::new("d2", "T", "Body text here.");
        let ex = MaskedExample {
            doc_id: "d2".into(),
            blanks: vec![],
            answers: vec![],
            seed: 0,
            exhausted: true,
            absorbed_gap_tokens: 0,
        };
        let backend = train_backend();
        let fake = infill_example(&doc, &ex, &backend, &DecodingParams::default()).unwrap();
        assert_eq!(fake.text, doc.text());
        assert!(fake.replacements.is_empty());
    }

    #[test]
    fn strict_retries_rarely_reproduce_the_answer() {
        // With generous retries the original answer should almost never
        // survive; spot-check a small corpus-driven setup.
        let (doc, ex) = tiny_doc_and_example();
        let backend = train_backend();
        let p = DecodingParams {
            strict_fake_retries: 5,
            ..DecodingParams::default()
        };
        let mut same = 0;
        let total = 100;
        for seed in 0..total {
            let mut p = p.clone();
            p.seed = seed;
            let fake = infill_example(&doc, &ex, &backend, &p).unwrap();
            if same_text(&fake.replacements[0].generated, &fake.replacements[0].original) {
                same += 1;
            }
        }
        assert!(
            (same as f64) < 0.10 * total as f64,
            "{same}/{total} fakes reproduced the original"
        );
    }

    #[test]
    fn generate_fakes_cycles_examples_and_ids() {
        let doc = Document::new(
            "d3",
            "Heading Words",
            "Intro sentence for protection. Sparse coding helps dictionary learning greatly. Matching pursuit finds sparse approximations quickly.",
        );
        let stop = crate::text::StopwordSet::default_english();
        let pool = crate::concepts::build_pool(&doc, &stop, 0.0, 0.7);
        assert!(!pool.is_empty());
        let backend = train_backend();
        let masking = MaskingParams {
            k: 2,
            seed: 9,
            ..MaskingParams::default()
        };
        let decoding = DecodingParams {
            seed: 31,
            ..DecodingParams::default()
        };
        let fakes = generate_fakes(&doc, &pool, &backend, &masking, &decoding, 5).unwrap();
        assert_eq!(fakes.len(), 5);
        assert_eq!(fakes[0].fake_id, "d3-f000");
        assert_eq!(fakes[4].fake_id, "d3-f004");
        // Fakes 0 and 2 share a masked example but use different streams.
        assert_eq!(fakes[0].example_seed, fakes[2].example_seed);
        assert_ne!(fakes[0].seed, fakes[2].seed);
        for f in &fakes {
            assert!(f.text.starts_with(doc.head_text()));
        }
    }

    #[test]
    fn join_tokens_spacing() {
        let toks: Vec<String> = ["sparse", "coding", ",", "fast", "(", "new", ")", "."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(join_tokens(&toks), "sparse coding, fast (new).");
        assert_eq!(join_tokens(&[]), "");
    }

    #[test]
    fn invalid_params_are_rejected_up_front() {
        let (doc, ex) = tiny_doc_and_example();
        let backend = train_backend();
        for bad in [
            DecodingParams {
                temperature: 0.0,
                ..DecodingParams::default()
            },
            DecodingParams {
                delta: 0.5,
                ..DecodingParams::default()
            },
            DecodingParams {
                top_p: 0.0,
                ..DecodingParams::default()
            },
        ] {
            assert!(infill_example(&doc, &ex, &backend, &bad).is_err());
        }
    }
}
