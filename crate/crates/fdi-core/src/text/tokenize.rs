//! Whitespace/punctuation tokenizer that keeps byte offsets into the source
//! string, so any token range can be mapped back to the exact original slice.

use serde::{Deserialize, Serialize};

/// A single token plus its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Byte offset of the first char, inclusive.
    pub start: usize,
    /// Byte offset one past the last char, exclusive.
    pub end: usize,
}

impl Token {
    fn new(surface: &str, start: usize, end: usize) -> Self {
        Token {
            surface: surface.to_owned(),
            start,
            end,
        }
    }
}

/// True for characters allowed to join two alphanumeric runs into one word
/// token ("non-negative", "don't").
fn is_joiner(c: char) -> bool {
    c == '-' || c == '\'' || c == '\u{2019}'
}

/// Splits `raw` into word tokens (alphanumeric runs, with word-internal
/// hyphens and apostrophes kept) and single-character punctuation tokens.
/// Whitespace only ever appears between tokens, never inside one.
pub fn tokenize(raw: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = raw.char_indices().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i + 1;
            loop {
                if j < n && chars[j].1.is_alphanumeric() {
                    j += 1;
                } else if j + 1 < n && is_joiner(chars[j].1) && chars[j + 1].1.is_alphanumeric() {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = if j < n { chars[j].0 } else { raw.len() };
            tokens.push(Token::new(&raw[start..end], start, end));
            i = j;
        } else {
            // Any other char is its own token.
            let end = if i + 1 < n { chars[i + 1].0 } else { raw.len() };
            tokens.push(Token::new(&raw[start..end], start, end));
            i += 1;
        }
    }
    tokens
}

/// Rebuilds the original string from tokens plus the whitespace gaps between
/// them. Exists mostly so tests can assert the offsets are lossless.
pub fn detokenize(raw: &str, tokens: &[Token]) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut cursor = 0;
    for t in tokens {
        out.push_str(&raw[cursor..t.start]);
        out.push_str(&t.surface);
        cursor = t.end;
    }
    out.push_str(&raw[cursor..]);
    out
}
