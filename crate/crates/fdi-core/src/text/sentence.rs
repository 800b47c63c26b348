//! Heuristic sentence splitting over the token stream.

use super::tokenize::Token;

/// Common abbreviations whose trailing period does not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "cf", "dept", "dr", "eq", "est", "etc", "fig", "inc", "jr", "ltd", "mr",
    "mrs", "ms", "no", "pp", "prof", "sr", "st", "vol", "vs",
];

/// Splits a token stream into sentences, returned as `(start, end)` token
/// index ranges covering all tokens in order.
///
/// A `.`, `!` or `?` token closes a sentence when it is followed by
/// whitespace and an uppercase-initial token, and (for periods) the word
/// before it is neither a known abbreviation nor part of a dotted one like
/// "e.g." or "U.S.".
pub fn split_sentences(tokens: &[Token]) -> Vec<(usize, usize)> {
    let mut sentences = Vec::new();
    let mut start = 0;
    for i in 0..tokens.len() {
        if is_boundary(tokens, i) {
            sentences.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < tokens.len() {
        sentences.push((start, tokens.len()));
    }
    sentences
}

fn is_boundary(tokens: &[Token], i: usize) -> bool {
    let t = &tokens[i];
    if !matches!(t.surface.as_str(), "." | "!" | "?") {
        return false;
    }
    let Some(next) = tokens.get(i + 1) else {
        return false;
    };
    // Require an actual gap (the tokenizer only leaves whitespace in gaps)
    // and a capitalized continuation.
    if next.start == t.end {
        return false;
    }
    if !next.surface.chars().next().is_some_and(char::is_uppercase) {
        return false;
    }
    if t.surface == "." && i > 0 {
        let prev = &tokens[i - 1];
        if ABBREVIATIONS.contains(&prev.surface.to_lowercase().as_str()) {
            return false;
        }
        // Dotted abbreviation: a single letter directly preceded by another
        // period, as in "e.g." or "U.S.".
        let single_letter = prev.surface.chars().count() == 1
            && prev.surface.chars().all(char::is_alphabetic)
            && prev.end == t.start;
        if single_letter && i >= 2 && tokens[i - 2].surface == "." {
            return false;
        }
    }
    true
}
