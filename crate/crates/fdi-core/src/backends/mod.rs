//! Scoring backends. A backend owns a vocabulary and, given a context of
//! token ids, returns one raw score (log-space, higher = more likely) per
//! vocabulary entry. The decoder is backend-agnostic: the bundled n-gram
//! model and a remote scoring service are interchangeable.

mod ngram;
mod remote;

pub use ngram::NGramModel;
pub use remote::{RemoteBackend, RetryConfig};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::pairs::{ANS, EOS, SEP, UNK};

/// Ids of the structural tokens every vocabulary must contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialIds {
    pub sep: u32,
    pub ans: u32,
    pub masked_word: u32,
    pub masked_ngram: u32,
    pub masked_sentence: u32,
    pub eos: u32,
    pub unk: u32,
}

/// Token-string <-> id mapping shared by backends and the decoder.
///
/// The seven special tokens occupy ids 0..7 in a fixed order; words follow
/// in first-seen order, which keeps vocabulary construction deterministic.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    specials: SpecialIds,
}

impl Vocabulary {
    /// Builds a vocabulary from a token stream. Special tokens are placed
    /// first whether or not they occur in the stream.
    pub fn build<I, S>(stream: I) -> Vocabulary
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = crate::pairs::SPECIAL_TOKENS
            .iter()
            .map(|s| (*s).to_owned())
            .collect();
        let mut index: HashMap<String, u32> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        for tok in stream {
            let tok = tok.as_ref();
            if !index.contains_key(tok) {
                index.insert(tok.to_owned(), tokens.len() as u32);
                tokens.push(tok.to_owned());
            }
        }
        let specials = SpecialIds::locate(&index).expect("specials were just inserted");
        Vocabulary {
            tokens,
            index,
            specials,
        }
    }

    /// Rebuilds from an explicit id-ordered token list (model files). All
    /// special tokens must be present; duplicates are rejected.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::InvalidParams(format!("duplicate vocabulary token `{t}`")));
            }
        }
        let specials = SpecialIds::locate(&index)?;
        Ok(Vocabulary {
            tokens,
            index,
            specials,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn specials(&self) -> SpecialIds {
        self.specials
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Id of the token, or the `[unk]` id for out-of-vocabulary tokens.
    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id_of(token).unwrap_or(self.specials.unk)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Encodes a token-string stream to ids, mapping unknowns to `[unk]`.
    pub fn encode<'a, I>(&self, stream: I) -> Vec<u32>
    where
        I: IntoIterator<Item = &'a str>,
    {
        stream.into_iter().map(|t| self.id_or_unk(t)).collect()
    }
}

impl SpecialIds {
    fn locate(index: &HashMap<String, u32>) -> Result<SpecialIds> {
        let get = |tok: &'static str| index.get(tok).copied().ok_or(Error::MissingSpecial(tok));
        Ok(SpecialIds {
            sep: get(SEP)?,
            ans: get(ANS)?,
            masked_word: get(crate::masking::MASK_WORD)?,
            masked_ngram: get(crate::masking::MASK_NGRAM)?,
            masked_sentence: get(crate::masking::MASK_SENTENCE)?,
            eos: get(EOS)?,
            unk: get(UNK)?,
        })
    }

    /// The structural ids that must never be emitted as answer text.
    pub fn structural(&self) -> [u32; 5] {
        [
            self.sep,
            self.masked_word,
            self.masked_ngram,
            self.masked_sentence,
            self.eos,
        ]
    }
}

/// Anything that can score the next token given a context of ids.
///
/// Implementations must be safe to call from multiple threads at once and
/// must return exactly `vocabulary().len()` finite scores.
pub trait InfillBackend: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;

    /// Raw next-token scores for every vocabulary entry, higher = better.
    fn score_next(&self, context: &[u32]) -> Result<Vec<f64>>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_come_first_and_words_follow_in_order() {
        let v = Vocabulary::build(["beta", "alpha", "beta", "gamma"]);
        assert_eq!(v.len(), 7 + 3);
        assert_eq!(v.token(v.specials().sep), SEP);
        assert_eq!(v.id_of("beta"), Some(7));
        assert_eq!(v.id_of("alpha"), Some(8));
        assert_eq!(v.id_of("gamma"), Some(9));
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let v = Vocabulary::build(["word"]);
        assert_eq!(v.id_or_unk("missing"), v.specials().unk);
        assert_eq!(v.encode(["word", "missing"]), vec![7, v.specials().unk]);
    }

    #[test]
    fn from_tokens_requires_specials() {
        let err = Vocabulary::from_tokens(vec!["just".into(), "words".into()]).unwrap_err();
        assert!(matches!(err, Error::MissingSpecial(_)));

        let mut toks: Vec<String> = crate::pairs::SPECIAL_TOKENS
            .iter()
            .map(|s| (*s).to_owned())
            .collect();
        toks.push("word".into());
        let v = Vocabulary::from_tokens(toks).unwrap();
        assert_eq!(v.id_of("word"), Some(7));
    }

    #[test]
    fn build_is_deterministic() {
        let a = Vocabulary::build(["x", "y", "z", "x"]);
        let b = Vocabulary::build(["x", "y", "z", "x"]);
        assert_eq!(a.tokens(), b.tokens());
    }
}
