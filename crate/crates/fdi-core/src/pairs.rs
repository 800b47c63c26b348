//! Training-pair serialization.
//!
//! A masked document and its answers travel as one line of text:
//!
//! ```text
//! masked text with [masked_word] holes [sep] answer one [ans] answer two [ans]
//! ```
//!
//! Any literal occurrence of a special token in user text is escaped with a
//! backslash (and backslashes double), so parsing is unambiguous and the
//! round trip is byte-exact for arbitrary input.

use crate::error::{Error, Result};
use crate::masking::MaskedExample;
use crate::text::{tokenize, Document, SpanKind};

pub const SEP: &str = "[sep]";
pub const ANS: &str = "[ans]";
pub const EOS: &str = "[eos]";
pub const UNK: &str = "[unk]";

/// All tokens with structural meaning, longest-match order not required
/// because none is a prefix of another.
pub const SPECIAL_TOKENS: &[&str] = &[
    SEP,
    ANS,
    crate::masking::MASK_WORD,
    crate::masking::MASK_NGRAM,
    crate::masking::MASK_SENTENCE,
    EOS,
    UNK,
];

fn match_special(rest: &str) -> Option<&'static str> {
    SPECIAL_TOKENS.iter().find(|t| rest.starts_with(**t)).copied()
}

/// Escapes literal special tokens and backslashes in free text.
pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        if let Some(tok) = match_special(rest) {
            out.push('\\');
            out.push_str(tok);
            rest = &rest[tok.len()..];
        } else {
            let c = rest.chars().next().unwrap();
            if c == '\\' {
                out.push_str("\\\\");
            } else {
                out.push(c);
            }
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

/// One lexical unit of a serialized line.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Atom {
    /// Unescaped literal text (single char or unescaped special).
    Text(String),
    /// A structural special token.
    Special(&'static str),
}

/// Lexes a serialized line into literal text and structural tokens,
/// undoing the escaping.
fn atoms(line: &str) -> Vec<Atom> {
    let mut out = Vec::new();
    let mut rest = line;
    let push_text = |out: &mut Vec<Atom>, s: &str| {
        if let Some(Atom::Text(t)) = out.last_mut() {
            t.push_str(s);
        } else {
            out.push(Atom::Text(s.to_owned()));
        }
    };
    while !rest.is_empty() {
        if let Some(stripped) = rest.strip_prefix('\\') {
            if let Some(tok) = match_special(stripped) {
                push_text(&mut out, tok);
                rest = &stripped[tok.len()..];
            } else if let Some(stripped2) = stripped.strip_prefix('\\') {
                push_text(&mut out, "\\");
                rest = stripped2;
            } else {
                // Stray backslash: keep it literally.
                push_text(&mut out, "\\");
                rest = stripped;
            }
        } else if let Some(tok) = match_special(rest) {
            out.push(Atom::Special(tok));
            rest = &rest[tok.len()..];
        } else {
            let c = rest.chars().next().unwrap();
            let mut buf = [0u8; 4];
            push_text(&mut out, c.encode_utf8(&mut buf));
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

/// Serializes a masked document plus answers into one line.
///
/// Blanks are replaced by their placeholder tokens in place; the masked text
/// and the answers are joined as `x [sep] a1 [ans] a2 [ans]`. With zero
/// blanks the answer section is empty and the line ends `x [sep] `.
pub fn serialize_pair(doc: &Document, example: &MaskedExample) -> String {
    let mut out = String::with_capacity(doc.text().len() + 64);
    let mut cursor = 0;
    for blank in &example.blanks {
        let (cs, ce) = char_range(doc, blank.span.start, blank.span.end);
        out.push_str(&escape(&doc.text()[cursor..cs]));
        out.push_str(&blank.mask);
        cursor = ce;
    }
    out.push_str(&escape(&doc.text()[cursor..]));
    out.push(' ');
    out.push_str(SEP);
    out.push(' ');
    for (i, ans) in example.answers.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&escape(ans));
        out.push(' ');
        out.push_str(ANS);
    }
    out
}

fn char_range(doc: &Document, start: usize, end: usize) -> (usize, usize) {
    (doc.tokens()[start].start, doc.tokens()[end - 1].end)
}

/// A parsed training pair: the literal text segments around the blanks, the
/// blank kinds in order, and the answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPair {
    /// `masks.len() + 1` segments; joining them interleaved with the mask
    /// placeholders reproduces the masked text.
    pub segments: Vec<String>,
    pub masks: Vec<SpanKind>,
    pub answers: Vec<String>,
}

impl ParsedPair {
    /// The masked text with placeholders re-inserted (unescaped form).
    pub fn masked_text(&self) -> String {
        let mut out = String::new();
        for (i, seg) in self.segments.iter().enumerate() {
            out.push_str(seg);
            if i < self.masks.len() {
                out.push_str(mask_token(self.masks[i]));
            }
        }
        out
    }
}

fn mask_token(kind: SpanKind) -> &'static str {
    kind.mask_token()
}

fn kind_of(tok: &str) -> Option<SpanKind> {
    match tok {
        crate::masking::MASK_WORD => Some(SpanKind::Word),
        crate::masking::MASK_NGRAM => Some(SpanKind::Ngram),
        crate::masking::MASK_SENTENCE => Some(SpanKind::Sentence),
        _ => None,
    }
}

/// Parses one serialized line back into segments, blank kinds and answers.
/// Rejects lines that do not follow the exact `x [sep] a1 [ans] ...` shape.
pub fn parse_pair(line: &str) -> Result<ParsedPair> {
    let mut segments = Vec::new();
    let mut masks = Vec::new();
    let mut answers = Vec::new();
    let mut current = String::new();
    let mut seen_sep = false;
    let mut iter = atoms(line).into_iter().peekable();

    // Masked-text section, up to [sep].
    while let Some(atom) = iter.next() {
        match atom {
            Atom::Text(t) => current.push_str(&t),
            Atom::Special(SEP) => {
                let Some(stripped) = current.strip_suffix(' ') else {
                    return Err(Error::MalformedPair("missing space before [sep]".into()));
                };
                segments.push(stripped.to_owned());
                seen_sep = true;
                break;
            }
            Atom::Special(tok) => {
                let Some(kind) = kind_of(tok) else {
                    return Err(Error::MalformedPair(format!(
                        "unexpected {tok} in masked text"
                    )));
                };
                segments.push(std::mem::take(&mut current));
                masks.push(kind);
            }
        }
    }
    if !seen_sep {
        return Err(Error::MalformedPair("missing [sep]".into()));
    }

    // Answer section: ` a [ans]` repeated, or a single trailing space.
    match iter.next() {
        Some(Atom::Text(t)) if t.starts_with(' ') => {
            let mut buf = t[1..].to_owned();
            loop {
                match iter.next() {
                    Some(Atom::Text(t)) => buf.push_str(&t),
                    Some(Atom::Special(ANS)) => {
                        let Some(stripped) = buf.strip_suffix(' ') else {
                            return Err(Error::MalformedPair("missing space before [ans]".into()));
                        };
                        answers.push(stripped.to_owned());
                        buf = String::new();
                        // After [ans]: either end of line or ` ` + next answer.
                        match iter.next() {
                            None => break,
                            Some(Atom::Text(t)) if t.starts_with(' ') => {
                                buf.push_str(&t[1..]);
                            }
                            Some(_) => {
                                return Err(Error::MalformedPair(
                                    "expected space after [ans]".into(),
                                ))
                            }
                        }
                    }
                    Some(Atom::Special(tok)) => {
                        return Err(Error::MalformedPair(format!(
                            "unexpected {tok} in answers"
                        )))
                    }
                    None if buf.is_empty() && answers.is_empty() => break,
                    None => {
                        return Err(Error::MalformedPair("answer not closed by [ans]".into()))
                    }
                }
            }
        }
        None => return Err(Error::MalformedPair("nothing after [sep]".into())),
        Some(_) => return Err(Error::MalformedPair("expected space after [sep]".into())),
    }

    if answers.len() != masks.len() {
        return Err(Error::MalformedPair(format!(
            "{} blanks but {} answers",
            masks.len(),
            answers.len()
        )));
    }
    Ok(ParsedPair {
        segments,
        masks,
        answers,
    })
}

/// Re-serializes a parsed pair; `serialize_parsed(parse_pair(l)) == l` for
/// every line produced by [`serialize_pair`].
pub fn serialize_parsed(pair: &ParsedPair) -> String {
    let mut out = String::new();
    for (i, seg) in pair.segments.iter().enumerate() {
        out.push_str(&escape(seg));
        if i < pair.masks.len() {
            out.push_str(mask_token(pair.masks[i]));
        }
    }
    out.push(' ');
    out.push_str(SEP);
    out.push(' ');
    for (i, ans) in pair.answers.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&escape(ans));
        out.push(' ');
        out.push_str(ANS);
    }
    out
}

/// Token stream of a serialized line as the backends see it: specials stay
/// whole, literal text goes through the document tokenizer.
pub fn line_tokens(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for atom in atoms(line) {
        match atom {
            Atom::Special(tok) => out.push(tok.to_owned()),
            Atom::Text(t) => out.extend(tokenize(&t).into_iter().map(|t| t.surface)),
        }
    }
    out
}

/// Token stream of the masked text plus the trailing separator — the
/// conditioning context an infill model starts from.
pub fn context_tokens(doc: &Document, example: &MaskedExample) -> Vec<String> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for blank in &example.blanks {
        while cursor < blank.span.start {
            out.push(doc.tokens()[cursor].surface.clone());
            cursor += 1;
        }
        out.push(blank.mask.clone());
        cursor = blank.span.end;
    }
    while cursor < doc.token_count() {
        out.push(doc.tokens()[cursor].surface.clone());
        cursor += 1;
    }
    out.push(SEP.to_owned());
    out
}

/// Full token stream of a training pair (context, answers, answer markers),
/// as consumed during model training.
pub fn training_tokens(doc: &Document, example: &MaskedExample) -> Vec<String> {
    let mut out = context_tokens(doc, example);
    for ans in &example.answers {
        out.extend(tokenize(ans).into_iter().map(|t| t.surface));
        out.push(ANS.to_owned());
    }
    out
}
