//! Additively smoothed n-gram scoring backend.
//!
//! Trains on serialized training-pair lines and scores the next token from
//! the last `order - 1` context ids. Scores are smoothed log-probabilities
//! `ln(count + alpha) - ln(total + alpha * V)`, so a plain softmax over
//! them recovers the smoothed conditional distribution exactly.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pairs::{line_tokens, EOS};

use super::{InfillBackend, Vocabulary};

#[derive(Debug, Clone)]
pub struct NGramModel {
    vocab: Vocabulary,
    order: usize,
    alpha: f64,
    /// context ids (length < order) -> next token id -> count.
    counts: HashMap<Vec<u32>, HashMap<u32, u64>>,
    totals: HashMap<Vec<u32>, u64>,
}

impl NGramModel {
    /// Trains from serialized training-pair lines. Each line is tokenized,
    /// terminated with `[eos]`, and every prefix-to-next-token transition
    /// (with contexts truncated to `order - 1`) is counted.
    pub fn train<I, S>(lines: I, order: usize, alpha: f64) -> Result<NGramModel>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if order < 2 {
            return Err(Error::InvalidParams(format!("order must be >= 2, got {order}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be > 0, got {alpha}")));
        }
        let streams: Vec<Vec<String>> = lines
            .into_iter()
            .map(|l| {
                let mut toks = line_tokens(l.as_ref());
                toks.push(EOS.to_owned());
                toks
            })
            .collect();
        if streams.iter().all(|s| s.len() <= 1) {
            return Err(Error::EmptyCorpus);
        }
        let vocab = Vocabulary::build(streams.iter().flatten().map(String::as_str));
        let mut counts: HashMap<Vec<u32>, HashMap<u32, u64>> = HashMap::new();
        let mut totals: HashMap<Vec<u32>, u64> = HashMap::new();
        for stream in &streams {
            let ids = vocab.encode(stream.iter().map(String::as_str));
            for i in 0..ids.len() {
                let ctx = ids[i.saturating_sub(order - 1)..i].to_vec();
                *counts.entry(ctx.clone()).or_default().entry(ids[i]).or_default() += 1;
                *totals.entry(ctx).or_default() += 1;
            }
        }
        Ok(NGramModel {
            vocab,
            order,
            alpha,
            counts,
            totals,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of distinct contexts seen in training.
    pub fn context_count(&self) -> usize {
        self.counts.len()
    }

    fn tail<'a>(&self, context: &'a [u32]) -> &'a [u32] {
        &context[context.len().saturating_sub(self.order - 1)..]
    }

    /// Writes the model as a line-oriented text dump: a header, the
    /// vocabulary in id order, then one `context \t token \t count` row per
    /// transition, sorted for reproducible bytes.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#ngram-model v1")?;
        writeln!(w, "#order\t{}", self.order)?;
        writeln!(w, "#alpha\t{}", self.alpha)?;
        for tok in self.vocab.tokens() {
            writeln!(w, "#token\t{tok}")?;
        }
        let sorted: BTreeMap<&Vec<u32>, &HashMap<u32, u64>> = self.counts.iter().collect();
        for (ctx, nexts) in sorted {
            let ctx_str: Vec<String> = ctx.iter().map(u32::to_string).collect();
            let sorted_nexts: BTreeMap<&u32, &u64> = nexts.iter().collect();
            for (tok, count) in sorted_nexts {
                writeln!(w, "{}\t{tok}\t{count}", ctx_str.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn save_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save(std::fs::File::create(path)?)
    }

    pub fn load<R: Read>(reader: R, path: &Path) -> Result<NGramModel> {
        let fail = |message: String| Error::ModelFormat {
            path: path.to_owned(),
            message,
        };
        let mut order = None;
        let mut alpha = None;
        let mut tokens = Vec::new();
        let mut counts: HashMap<Vec<u32>, HashMap<u32, u64>> = HashMap::new();
        let mut totals: HashMap<Vec<u32>, u64> = HashMap::new();
        let mut lines = BufReader::new(reader).lines();
        match lines.next().transpose()? {
            Some(l) if l == "#ngram-model v1" => {}
            other => return Err(fail(format!("bad magic line: {other:?}"))),
        }
        for line in lines {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest
                    .split_once('\t')
                    .ok_or_else(|| fail(format!("bad header line: {line}")))?;
                match key {
                    "order" => order = Some(value.parse().map_err(|e| fail(format!("order: {e}")))?),
                    "alpha" => alpha = Some(value.parse().map_err(|e| fail(format!("alpha: {e}")))?),
                    "token" => tokens.push(value.to_owned()),
                    _ => return Err(fail(format!("unknown header key `{key}`"))),
                }
                continue;
            }
            let mut parts = line.split('\t');
            let (ctx, tok, count) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(c), Some(t), Some(n), None) => (c, t, n),
                _ => return Err(fail(format!("bad count line: {line}"))),
            };
            let ctx: Vec<u32> = ctx
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|e| fail(format!("context id: {e}"))))
                .collect::<Result<_>>()?;
            let tok: u32 = tok.parse().map_err(|e| fail(format!("token id: {e}")))?;
            let count: u64 = count.parse().map_err(|e| fail(format!("count: {e}")))?;
            if tok as usize >= tokens.len() || ctx.iter().any(|&i| i as usize >= tokens.len()) {
                return Err(fail(format!("token id out of range in: {line}")));
            }
            *counts.entry(ctx.clone()).or_default().entry(tok).or_default() += count;
            *totals.entry(ctx).or_default() += count;
        }
        let order = order.ok_or_else(|| fail("missing order header".into()))?;
        let alpha = alpha.ok_or_else(|| fail("missing alpha header".into()))?;
        if order < 2 || !(alpha > 0.0) {
            return Err(fail(format!("invalid order/alpha: {order}/{alpha}")));
        }
        Ok(NGramModel {
            vocab: Vocabulary::from_tokens(tokens)?,
            order,
            alpha,
            counts,
            totals,
        })
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<NGramModel> {
        NGramModel::load(std::fs::File::open(path.as_ref())?, path.as_ref())
    }
}

impl InfillBackend for NGramModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn score_next(&self, context: &[u32]) -> Result<Vec<f64>> {
        let tail = self.tail(context);
        let v = self.vocab.len() as f64;
        let nexts = self.counts.get(tail);
        let total = self.totals.get(tail).copied().unwrap_or(0) as f64;
        let denom = (total + self.alpha * v).ln();
        let scores = (0..self.vocab.len() as u32)
            .map(|id| {
                let c = nexts.and_then(|m| m.get(&id)).copied().unwrap_or(0) as f64;
                (c + self.alpha).ln() - denom
            })
            .collect();
        Ok(scores)
    }
}
