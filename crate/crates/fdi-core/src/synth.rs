//! Deterministic synthetic corpora for tests and benchmarks: small
//! technical-sounding documents with recurring multi-word phrases, so
//! concept extraction, masking and decoding all have something to bite on.
//! Same seed, same corpus — on every platform.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::seeds::splitmix64;
use crate::text::Document;

const PHRASES: &[&str] = &[
    "sparse coding",
    "dictionary learning",
    "matrix factorization",
    "graph networks",
    "signal recovery",
    "deep learning",
    "information retrieval",
    "neural networks",
    "feature selection",
    "image segmentation",
    "anomaly detection",
    "transfer learning",
    "spectral clustering",
    "topic models",
    "speech recognition",
    "active learning",
];

const CONTENT: &[&str] = &[
    "algorithm", "analysis", "approach", "approximation", "architecture", "baseline", "basis",
    "benchmark", "bound", "classifier", "cluster", "convergence", "corpus", "criterion", "dataset",
    "decoder", "density", "descent", "distribution", "embedding", "encoder", "entropy", "error",
    "estimate", "evaluation", "experiment", "framework", "function", "gradient", "graph",
    "heuristic", "inference", "kernel", "layer", "lemma", "likelihood", "loss", "margin",
    "measure", "method", "metric", "model", "module", "norm", "objective", "operator",
    "optimization", "parameter", "partition", "pipeline", "precision", "prediction", "prior",
    "projection", "proof", "protocol", "pruning", "recall", "regression", "regularizer",
    "representation", "residual", "sample", "scheme", "score", "signal", "solver", "solution",
    "structure", "subspace", "system", "technique", "theorem", "threshold", "training",
    "transform", "variant", "vector", "weight", "workload",
];

const CONNECTORS: &[&str] = &[
    "the", "of", "a", "in", "for", "with", "we", "is", "and", "to", "on", "as", "by", "this",
    "that", "from", "are", "at",
];

fn choose<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn push_word(sentence: &mut Vec<String>, word: &str) {
    sentence.push(word.to_owned());
}

fn sentence<R: Rng>(rng: &mut R, target_tokens: usize) -> String {
    let mut words: Vec<String> = Vec::with_capacity(target_tokens + 2);
    push_word(&mut words, choose(rng, CONNECTORS));
    while words.len() < target_tokens {
        if rng.random_bool(0.35) {
            for w in choose(rng, PHRASES).split(' ') {
                push_word(&mut words, w);
            }
        } else {
            push_word(&mut words, choose(rng, CONTENT));
        }
        if rng.random_bool(0.45) && words.len() < target_tokens {
            push_word(&mut words, choose(rng, CONNECTORS));
        }
    }
    words[0] = capitalize(&words[0]);
    format!("{}.", words.join(" "))
}

fn title<R: Rng>(rng: &mut R) -> String {
    let mut words: Vec<String> = Vec::new();
    for w in choose(rng, PHRASES).split(' ') {
        words.push(capitalize(w));
    }
    for _ in 0..rng.random_range(1..=2) {
        words.push(capitalize(choose(rng, CONTENT)));
    }
    words.join(" ")
}

/// Builds `n_docs` synthetic documents with roughly `sentences_per_doc`
/// body sentences of 8-14 tokens each.
pub fn corpus(n_docs: usize, sentences_per_doc: usize, seed: u64) -> Vec<Document> {
    (0..n_docs)
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed ^ i as u64));
            let title = title(&mut rng);
            let body: Vec<String> = (0..sentences_per_doc)
                .map(|_| {
                    let len = rng.random_range(8..=14);
                    sentence(&mut rng, len)
                })
                .collect();
            Document::new(format!("doc-{i:04}"), &title, &body.join(" "))
        })
        .collect()
}

/// Short documents (a title plus two brief sentences, well under 50
/// tokens), handy for exhaustive oracle comparisons.
pub fn small_corpus(n_docs: usize, seed: u64) -> Vec<Document> {
    (0..n_docs)
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed ^ (0x5ca1e + i as u64)));
            let title = title(&mut rng);
            let body: Vec<String> = (0..2)
                .map(|_| {
                    let len = rng.random_range(6..=9);
                    sentence(&mut rng, len)
                })
                .collect();
            Document::new(format!("small-{i:04}"), &title, &body.join(" "))
        })
        .collect()
}
