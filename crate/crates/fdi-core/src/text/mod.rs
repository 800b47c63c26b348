//! Text model: tokenization, sentence structure, documents, spans and
//! stopwords. Everything downstream (concept extraction, masking, decoding)
//! works in terms of the token indices defined here.

mod sentence;
mod tokenize;

pub use sentence::split_sentences;
pub use tokenize::{detokenize, tokenize, Token};

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// What a masked span stands for; decides which placeholder token marks it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanKind {
    Word,
    Ngram,
    Sentence,
}

/// A contiguous token range `[start..end)` within one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: SpanKind,
}

impl Span {
    /// A one-token word span.
    pub fn word(i: usize) -> Self {
        Span {
            start: i,
            end: i + 1,
            kind: SpanKind::Word,
        }
    }

    /// A multi-token span; collapses to `Word` when it covers one token.
    pub fn ngram(start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        let kind = if end - start == 1 {
            SpanKind::Word
        } else {
            SpanKind::Ngram
        };
        Span { start, end, kind }
    }

    /// A whole-sentence span, regardless of length.
    pub fn sentence(start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        Span {
            start,
            end,
            kind: SpanKind::Sentence,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A document with its tokenized view. The combined text is
/// `title + "\n" + body` (each NFC-normalized first); the title acts as
/// sentence zero, and title plus first body sentence form the protected
/// head that masking and generation must leave untouched.
#[derive(Debug, Clone)]
pub struct Document {
    id: String,
    title: String,
    body: String,
    text: String,
    tokens: Vec<Token>,
    /// Token index ranges, in order, covering every token exactly once.
    sentences: Vec<(usize, usize)>,
    /// First token index *after* the protected head.
    head_end: usize,
}

impl Document {
    pub fn new(id: impl Into<String>, title: &str, body: &str) -> Self {
        let title: String = title.nfc().collect();
        let body: String = body.nfc().collect();
        let text = if title.is_empty() {
            body.clone()
        } else if body.is_empty() {
            title.clone()
        } else {
            format!("{title}\n{body}")
        };

        // The title is a prefix of `text`, so its token offsets carry over;
        // body offsets shift by the title plus the joining newline.
        let title_tokens = tokenize(&title);
        let body_offset = text.len() - body.len();
        let mut tokens = title_tokens;
        let title_len = tokens.len();
        for mut t in tokenize(&body) {
            t.start += body_offset;
            t.end += body_offset;
            tokens.push(t);
        }

        let mut sentences = Vec::new();
        if title_len > 0 {
            sentences.push((0, title_len));
        }
        for (s, e) in split_sentences(&tokens[title_len..]) {
            sentences.push((s + title_len, e + title_len));
        }

        let head_end = sentences
            .get(if title_len > 0 { 1 } else { 0 })
            .map(|&(_, e)| e)
            .unwrap_or(title_len);

        Document {
            id: id.into(),
            title,
            body,
            text,
            tokens,
            sentences,
            head_end,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// The combined, normalized text all token offsets refer to.
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn sentences(&self) -> &[(usize, usize)] {
        &self.sentences
    }

    /// First token index after the protected head (title + first body
    /// sentence). Candidate spans must start at or beyond this index.
    pub fn head_end(&self) -> usize {
        self.head_end
    }

    /// The protected head as a text slice.
    pub fn head_text(&self) -> &str {
        if self.head_end == 0 {
            ""
        } else {
            &self.text[..self.tokens[self.head_end - 1].end]
        }
    }

    /// Index of the sentence containing token `tok`, if any.
    pub fn sentence_of(&self, tok: usize) -> Option<usize> {
        self.sentences.iter().position(|&(s, e)| s <= tok && tok < e)
    }

    /// The exact text slice covered by a token range.
    pub fn slice(&self, start: usize, end: usize) -> &str {
        debug_assert!(start < end && end <= self.tokens.len());
        &self.text[self.tokens[start].start..self.tokens[end - 1].end]
    }
}

/// Fraction of document tokens covered by `spans`. The spans must lie within
/// the document and must not overlap each other.
pub fn masked_rate(doc: &Document, spans: &[Span]) -> Result<f64> {
    let total = doc.token_count();
    let mut sorted: Vec<&Span> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut covered = 0usize;
    for (i, s) in sorted.iter().enumerate() {
        if s.end > total || s.is_empty() {
            return Err(Error::SpanOutOfRange(s.start, s.end, total));
        }
        if i + 1 < sorted.len() && s.end > sorted[i + 1].start {
            let n = sorted[i + 1];
            return Err(Error::OverlappingSpans(s.start, s.end, n.start, n.end));
        }
        covered += s.len();
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(covered as f64 / total as f64)
}

/// Words and delimiter characters that never belong to a concept.
///
/// The word list is matched case-insensitively; the delimiter set covers
/// standalone punctuation tokens. Both sides break concept runs.
#[derive(Debug, Clone)]
pub struct StopwordSet {
    words: HashSet<String>,
    delimiters: HashSet<char>,
}

/// Compact English stopword list used when no file is supplied.
const DEFAULT_ENGLISH: &str = "a about above after again against all am an and any are as at be because been \
before being below between both but by could did do does doing down during each few for from further had has \
have having he her here hers herself him himself his how i if in into is it its itself just me more most my \
myself no nor not now of off on once only or other our ours ourselves out over own same she should so some such \
than that the their theirs them themselves then there these they this those through to too under until up very \
was we were what when where which while who whom why will with you your yours yourself yourselves";

impl StopwordSet {
    /// Builds a set from explicit words; ASCII punctuation becomes the
    /// delimiter set. Lowercases everything.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordSet {
            words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
            delimiters: (0x21u8..=0x7e)
                .map(char::from)
                .filter(|c| c.is_ascii_punctuation())
                .collect(),
        }
    }

    pub fn default_english() -> Self {
        StopwordSet::new(DEFAULT_ENGLISH.split_whitespace())
    }

    /// Loads one word per line, ignoring blanks and `#` comments. An empty
    /// result is an error: a stopword set with no words is almost certainly
    /// a bad file, and it would make every token a concept member.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let raw = std::fs::read_to_string(path.as_ref())?;
        let set = StopwordSet::new(
            raw.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        );
        if set.words.is_empty() {
            return Err(Error::EmptyStopwords {
                path: path.as_ref().to_owned(),
            });
        }
        Ok(set)
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    /// True when a token consists solely of delimiter characters
    /// (single-char punctuation tokens, in practice).
    pub fn is_delimiter_token(&self, surface: &str) -> bool {
        !surface.is_empty() && surface.chars().all(|c| self.delimiters.contains(&c))
    }

    /// A token breaks a concept run if it is a stopword or a delimiter.
    pub fn breaks_run(&self, surface: &str) -> bool {
        self.is_delimiter_token(surface) || self.contains_word(surface)
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }
}
