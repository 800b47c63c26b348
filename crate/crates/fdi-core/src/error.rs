use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("stopword file {path} contains no words")]
    EmptyStopwords { path: PathBuf },

    #[error("spans overlap: {0}..{1} and {2}..{3}")]
    OverlappingSpans(usize, usize, usize, usize),

    #[error("span {0}..{1} out of range for document with {2} tokens")]
    SpanOutOfRange(usize, usize, usize),

    #[error("no candidates to mask in document `{doc_id}`")]
    NoCandidates { doc_id: String },

    #[error("document `{doc_id}` is too short to mask ({tokens} tokens)")]
    TooShortToMask { doc_id: String, tokens: usize },

    #[error("empty training corpus")]
    EmptyCorpus,

    #[error("malformed training pair: {0}")]
    MalformedPair(String),

    #[error("non-finite score at vocabulary index {0}")]
    NonFiniteScore(usize),

    #[error("vocabulary mismatch: expected {expected} scores, got {got}")]
    VocabularyMismatch { expected: usize, got: usize },

    #[error("missing special token `{0}` in vocabulary")]
    MissingSpecial(&'static str),

    #[error("backend failure at blank {blank}: {source}")]
    Backend {
        blank: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scoring service unreachable after {attempts} attempts: {message}")]
    RemoteTransport { attempts: u32, message: String },

    #[error("scoring service rejected request (http {status}): {message}")]
    RemoteRejected { status: u16, message: String },

    #[error("invalid scoring response: {0}")]
    InvalidResponse(String),

    #[error("not enough fakes for document `{doc_id}`, model `{model}`: need {needed}, have {have}")]
    InsufficientFakes {
        doc_id: String,
        model: String,
        needed: usize,
        have: usize,
    },

    #[error("quiz-2 requires exactly {expected} models, got {got}")]
    QuizModels { expected: usize, got: usize },

    #[error("review references unknown set `{0}`")]
    UnknownSetId(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("ngram model file {path}: {message}")]
    ModelFormat { path: PathBuf, message: String },
}
