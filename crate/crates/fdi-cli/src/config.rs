//! Layered run configuration.
//!
//! Precedence, highest first: command-line flags, `FDI_*` environment
//! variables, the TOML file named by `--config` (or `FDI_CONFIG`), built-in
//! defaults. Every knob has a default, so a bare `--corpus` is enough to
//! run.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use fdi_core::decoding::DecodingParams;
use fdi_core::masking::{MaskingParams, TrainMaskParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Self-contained n-gram model trained from the corpus (or loaded).
    Ngram,
    /// HTTP scoring service; requires an endpoint.
    Remote,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Ngram => "ngram",
            BackendKind::Remote => "remote",
        })
    }
}

impl FromStr for BackendKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ngram" => Ok(BackendKind::Ngram),
            "remote" => Ok(BackendKind::Remote),
            other => bail!("unknown backend `{other}` (expected `ngram` or `remote`)"),
        }
    }
}

// ---------------------------------------------------------------------------
// Command-line flag groups, flattened into the subcommands that use them.

#[derive(clap::Args, Debug, Default)]
pub struct CommonFlags {
    /// TOML configuration file; flags and FDI_* variables override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus to read: JSONL with one {"id", "title", "body"} per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Stopword list, one word per line; built-in English list if absent.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Base seed; all per-document and per-stage streams derive from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for per-document stages (defaults to all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(clap::Args, Debug, Default)]
pub struct MaskFlags {
    /// Masked examples drawn per document.
    #[arg(long)]
    pub k: Option<usize>,
    /// Stop masking once this fraction of tokens is covered.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Per-round probability of drawing a dense sentence.
    #[arg(long)]
    pub ps: Option<f64>,
    /// Per-round probability of drawing a concept span.
    #[arg(long)]
    pub pc: Option<f64>,
    /// Concept-token ratio for a sentence to enter the pool whole.
    #[arg(long)]
    pub ts: Option<f64>,
    /// Score quantile below which concepts are dropped.
    #[arg(long = "q-min")]
    pub q_min: Option<f64>,
    /// Masks at most this many tokens apart (same sentence) merge.
    #[arg(long = "merge-gap")]
    pub merge_gap: Option<usize>,
}

#[derive(clap::Args, Debug, Default)]
pub struct DecodeFlags {
    /// Softmax temperature.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Score divisor applied to content tokens of the original answers.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Nucleus mass for top-p sampling.
    #[arg(long = "top-p")]
    pub top_p: Option<f64>,
    /// Resample an answer this many times if it comes out equal to the
    /// original (case-insensitive); the last attempt is kept regardless.
    #[arg(long = "strict-fake-retries")]
    pub strict_fake_retries: Option<u32>,
    /// Fakes to produce per document.
    #[arg(long)]
    pub fakes: Option<usize>,
}

#[derive(clap::Args, Debug, Default)]
pub struct BackendFlags {
    /// Scoring backend.
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Base URL of the remote scoring service (remote backend only).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// n-gram order of the built-in backend.
    #[arg(long)]
    pub order: Option<usize>,
    /// Additive smoothing constant of the built-in backend.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Training examples drawn per document when fitting the n-gram model.
    #[arg(long = "train-per-doc")]
    pub train_per_doc: Option<usize>,
    /// Ask the remote service for only its top-k scores per step; the rest
    /// are floored.
    #[arg(long = "top-k")]
    pub top_k: Option<usize>,
    /// Load a previously saved n-gram model instead of training one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Save the trained n-gram model here after fitting.
    #[arg(long = "save-model")]
    pub save_model: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Config-file schema. Everything is optional; unknown keys are rejected so
// typos fail loudly instead of silently keeping a default.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub fakes: Option<usize>,
    #[serde(default)]
    pub masking: MaskingFile,
    #[serde(default)]
    pub decoding: DecodingFile,
    #[serde(default)]
    pub backend: BackendFile,
    #[serde(default)]
    pub training: TrainingFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskingFile {
    pub q_min: Option<f64>,
    pub t_s: Option<f64>,
    pub p_s: Option<f64>,
    pub p_c: Option<f64>,
    pub gamma: Option<f64>,
    pub k: Option<usize>,
    pub merge_gap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingFile {
    pub temperature: Option<f64>,
    pub delta: Option<f64>,
    pub top_p: Option<f64>,
    pub min_penalty_token_chars: Option<usize>,
    pub max_span_answer_tokens: Option<usize>,
    pub max_sentence_answer_tokens: Option<usize>,
    pub strict_fake_retries: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendFile {
    pub kind: Option<BackendKind>,
    pub endpoint: Option<String>,
    pub order: Option<usize>,
    pub alpha: Option<f64>,
    pub train_per_doc: Option<usize>,
    pub top_k: Option<usize>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingFile {
    pub sentence_prob: Option<f64>,
    pub word_prob: Option<f64>,
    pub ngram_extend_prob: Option<f64>,
    pub per_doc: Option<usize>,
}

// ---------------------------------------------------------------------------
// Resolved settings.

#[derive(Debug, Clone)]
pub struct BackendSettings {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub order: usize,
    pub alpha: f64,
    pub train_per_doc: usize,
    pub top_k: Option<usize>,
    pub model: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
}

/// Everything a pipeline command needs, fully resolved and validated.
#[derive(Debug, Clone)]
pub struct Settings {
    pub corpus: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub fakes: usize,
    /// Per-document seeds are derived later; the `seed` field inside is
    /// a placeholder here.
    pub masking: MaskingParams,
    pub decoding: DecodingParams,
    pub training: TrainMaskParams,
    pub training_per_doc: usize,
    pub backend: BackendSettings,
}

fn env_var(key: &str) -> Result<Option<String>> {
    match std::env::var(key) {
        Ok(v) => Ok(Some(v)),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(anyhow!("environment variable {key}: {e}")),
    }
}

fn env_parse<T>(key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    match env_var(key)? {
        Some(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| anyhow!("environment variable {key}={raw}: {e}")),
        None => Ok(None),
    }
}

/// `flag` beats `env` beats `file` beats `default`.
fn pick<T>(flag: Option<T>, env: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(env).or(file).unwrap_or(default)
}

impl Settings {
    pub fn resolve(
        common: &CommonFlags,
        mask: &MaskFlags,
        decode: &DecodeFlags,
        backend: &BackendFlags,
        training_per_doc_flag: Option<usize>,
    ) -> Result<Settings> {
        let file_path = match &common.config {
            Some(p) => Some(p.clone()),
            None => env_parse::<PathBuf>("FDI_CONFIG")?,
        };
        let file: FileConfig = match &file_path {
            Some(p) => {
                let raw = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                toml::from_str(&raw)
                    .with_context(|| format!("parsing config file {}", p.display()))?
            }
            None => FileConfig::default(),
        };

        let corpus = common
            .corpus
            .clone()
            .or(env_parse::<PathBuf>("FDI_CORPUS")?)
            .or(file.corpus)
            .ok_or_else(|| {
                anyhow!("no corpus given (use --corpus, FDI_CORPUS, or the config file)")
            })?;
        let stopwords = common
            .stopwords
            .clone()
            .or(env_parse::<PathBuf>("FDI_STOPWORDS")?)
            .or(file.stopwords);
        let seed = pick(common.seed, env_parse("FDI_SEED")?, file.seed, 0);
        let workers = common
            .workers
            .or(env_parse("FDI_WORKERS")?)
            .or(file.workers);
        if workers == Some(0) {
            bail!("workers must be at least 1");
        }

        let md = MaskingParams::default();
        let masking = MaskingParams {
            q_min: pick(mask.q_min, env_parse("FDI_MASKING_Q_MIN")?, file.masking.q_min, md.q_min),
            t_s: pick(mask.ts, env_parse("FDI_MASKING_T_S")?, file.masking.t_s, md.t_s),
            p_s: pick(mask.ps, env_parse("FDI_MASKING_P_S")?, file.masking.p_s, md.p_s),
            p_c: pick(mask.pc, env_parse("FDI_MASKING_P_C")?, file.masking.p_c, md.p_c),
            gamma: pick(mask.gamma, env_parse("FDI_MASKING_GAMMA")?, file.masking.gamma, md.gamma),
            k: pick(mask.k, env_parse("FDI_MASKING_K")?, file.masking.k, md.k),
            merge_gap: pick(
                mask.merge_gap,
                env_parse("FDI_MASKING_MERGE_GAP")?,
                file.masking.merge_gap,
                md.merge_gap,
            ),
            seed: 0,
        };
        masking.validate()?;

        let dd = DecodingParams::default();
        let decoding = DecodingParams {
            temperature: pick(
                decode.temperature,
                env_parse("FDI_DECODING_TEMPERATURE")?,
                file.decoding.temperature,
                dd.temperature,
            ),
            delta: pick(decode.delta, env_parse("FDI_DECODING_DELTA")?, file.decoding.delta, dd.delta),
            top_p: pick(decode.top_p, env_parse("FDI_DECODING_TOP_P")?, file.decoding.top_p, dd.top_p),
            min_penalty_token_chars: pick(
                None,
                env_parse("FDI_DECODING_MIN_PENALTY_TOKEN_CHARS")?,
                file.decoding.min_penalty_token_chars,
                dd.min_penalty_token_chars,
            ),
            max_span_answer_tokens: pick(
                None,
                env_parse("FDI_DECODING_MAX_SPAN_ANSWER_TOKENS")?,
                file.decoding.max_span_answer_tokens,
                dd.max_span_answer_tokens,
            ),
            max_sentence_answer_tokens: pick(
                None,
                env_parse("FDI_DECODING_MAX_SENTENCE_ANSWER_TOKENS")?,
                file.decoding.max_sentence_answer_tokens,
                dd.max_sentence_answer_tokens,
            ),
            strict_fake_retries: pick(
                decode.strict_fake_retries,
                env_parse("FDI_DECODING_STRICT_FAKE_RETRIES")?,
                file.decoding.strict_fake_retries,
                dd.strict_fake_retries,
            ),
            seed: 0,
        };
        decoding.validate()?;

        let fakes = pick(decode.fakes, env_parse("FDI_FAKES")?, file.fakes, 3);
        if fakes == 0 {
            bail!("fakes must be at least 1");
        }

        let td = TrainMaskParams::default();
        let training = TrainMaskParams {
            sentence_prob: pick(
                None,
                env_parse("FDI_TRAINING_SENTENCE_PROB")?,
                file.training.sentence_prob,
                td.sentence_prob,
            ),
            word_prob: pick(
                None,
                env_parse("FDI_TRAINING_WORD_PROB")?,
                file.training.word_prob,
                td.word_prob,
            ),
            ngram_extend_prob: pick(
                None,
                env_parse("FDI_TRAINING_NGRAM_EXTEND_PROB")?,
                file.training.ngram_extend_prob,
                td.ngram_extend_prob,
            ),
            seed: 0,
            ..td
        };
        for (name, v) in [
            ("training.sentence_prob", training.sentence_prob),
            ("training.word_prob", training.word_prob),
            ("training.ngram_extend_prob", training.ngram_extend_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} must be in [0, 1], got {v}");
            }
        }
        let training_per_doc = pick(
            training_per_doc_flag,
            env_parse("FDI_TRAINING_PER_DOC")?,
            file.training.per_doc,
            3,
        );
        if training_per_doc == 0 {
            bail!("training examples per document must be at least 1");
        }

        let kind = pick(
            backend.backend,
            env_parse("FDI_BACKEND_KIND")?,
            file.backend.kind,
            BackendKind::Ngram,
        );
        let endpoint = backend
            .endpoint
            .clone()
            .or(env_var("FDI_BACKEND_ENDPOINT")?)
            .or(file.backend.endpoint);
        if kind == BackendKind::Remote && endpoint.is_none() {
            bail!("the remote backend needs --endpoint (or FDI_BACKEND_ENDPOINT)");
        }
        let order = pick(backend.order, env_parse("FDI_BACKEND_ORDER")?, file.backend.order, 3);
        if order < 2 {
            bail!("n-gram order must be at least 2, got {order}");
        }
        let alpha = pick(backend.alpha, env_parse("FDI_BACKEND_ALPHA")?, file.backend.alpha, 0.1);
        if !(alpha > 0.0) {
            bail!("smoothing alpha must be positive, got {alpha}");
        }
        let train_per_doc = pick(
            backend.train_per_doc,
            env_parse("FDI_BACKEND_TRAIN_PER_DOC")?,
            file.backend.train_per_doc,
            3,
        );
        if train_per_doc == 0 {
            bail!("train-per-doc must be at least 1");
        }
        let top_k = backend
            .top_k
            .or(env_parse("FDI_BACKEND_TOP_K")?)
            .or(file.backend.top_k);
        let model = backend
            .model
            .clone()
            .or(env_parse::<PathBuf>("FDI_BACKEND_MODEL")?)
            .or(file.backend.model);

        Ok(Settings {
            corpus,
            stopwords,
            seed,
            workers,
            fakes,
            masking,
            decoding,
            training,
            training_per_doc,
            backend: BackendSettings {
                kind,
                endpoint,
                order,
                alpha,
                train_per_doc,
                top_k,
                model,
                save_model: backend.save_model.clone(),
            },
        })
    }

    /// The output-determining configuration as ordered JSON: what goes into
    /// the manifest and its digest. Worker count and output locations are
    /// excluded because they do not influence output bytes.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({
            "corpus": self.corpus.display().to_string(),
            "stopwords": self.stopwords.as_ref().map(|p| p.display().to_string()),
            "seed": self.seed,
            "fakes": self.fakes,
            "masking": {
                "q_min": self.masking.q_min,
                "t_s": self.masking.t_s,
                "p_s": self.masking.p_s,
                "p_c": self.masking.p_c,
                "gamma": self.masking.gamma,
                "k": self.masking.k,
                "merge_gap": self.masking.merge_gap,
            },
            "decoding": {
                "temperature": self.decoding.temperature,
                "delta": self.decoding.delta,
                "top_p": self.decoding.top_p,
                "min_penalty_token_chars": self.decoding.min_penalty_token_chars,
                "max_span_answer_tokens": self.decoding.max_span_answer_tokens,
                "max_sentence_answer_tokens": self.decoding.max_sentence_answer_tokens,
                "strict_fake_retries": self.decoding.strict_fake_retries,
            },
            "training": {
                "sentence_prob": self.training.sentence_prob,
                "word_prob": self.training.word_prob,
                "ngram_extend_prob": self.training.ngram_extend_prob,
                "per_doc": self.training_per_doc,
            },
            "backend": {
                "kind": self.backend.kind.to_string(),
                "endpoint": self.backend.endpoint,
                "order": self.backend.order,
                "alpha": self.backend.alpha,
                "train_per_doc": self.backend.train_per_doc,
                "top_k": self.backend.top_k,
                "model": self.backend.model.as_ref().map(|p| p.display().to_string()),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lock_env() -> std::sync::MutexGuard<'static, ()> {
        static LOCK: std::sync::Mutex<()> = std::sync::Mutex::new(());
        LOCK.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn base_flags(corpus: &str) -> CommonFlags {
        CommonFlags {
            corpus: Some(PathBuf::from(corpus)),
            ..CommonFlags::default()
        }
    }

    fn resolve_simple(common: &CommonFlags) -> Result<Settings> {
        Settings::resolve(
            common,
            &MaskFlags::default(),
            &DecodeFlags::default(),
            &BackendFlags::default(),
            None,
        )
    }

    #[test]
    fn defaults_match_documented_values() {
        let _guard = lock_env();
        let s = resolve_simple(&base_flags("c.jsonl")).unwrap();
        assert_eq!(s.masking.q_min, 0.4);
        assert_eq!(s.masking.t_s, 0.7);
        assert_eq!(s.masking.p_s, 0.7);
        assert_eq!(s.masking.p_c, 0.5);
        assert_eq!(s.masking.gamma, 0.2);
        assert_eq!(s.decoding.delta, 1.2);
        assert_eq!(s.decoding.top_p, 0.95);
        assert_eq!(s.decoding.temperature, 1.0);
        assert_eq!(s.backend.kind, BackendKind::Ngram);
        assert_eq!(s.fakes, 3);
        assert_eq!(s.seed, 0);
    }

    #[test]
    fn file_env_flag_precedence() {
        let _guard = lock_env();
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(
            &cfg,
            "seed = 5\n[masking]\ngamma = 0.3\nk = 7\n[decoding]\ndelta = 1.5\n",
        )
        .unwrap();

        let mut common = base_flags("c.jsonl");
        common.config = Some(cfg);

        // File layer only.
        let s = resolve_simple(&common).unwrap();
        assert_eq!(s.seed, 5);
        assert_eq!(s.masking.gamma, 0.3);
        assert_eq!(s.masking.k, 7);
        assert_eq!(s.decoding.delta, 1.5);

        // Environment beats the file.
        std::env::set_var("FDI_MASKING_GAMMA", "0.25");
        let s = resolve_simple(&common).unwrap();
        assert_eq!(s.masking.gamma, 0.25);

        // A flag beats both.
        let mask = MaskFlags {
            gamma: Some(0.1),
            ..MaskFlags::default()
        };
        let s = Settings::resolve(
            &common,
            &mask,
            &DecodeFlags::default(),
            &BackendFlags::default(),
            None,
        )
        .unwrap();
        assert_eq!(s.masking.gamma, 0.1);
        std::env::remove_var("FDI_MASKING_GAMMA");
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let _guard = lock_env();
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        std::fs::write(&cfg, "[masking]\ngama = 0.3\n").unwrap();
        let mut common = base_flags("c.jsonl");
        common.config = Some(cfg);
        let err = resolve_simple(&common).unwrap_err();
        assert!(err.to_string().contains("bad.toml"), "{err:#}");
    }

    #[test]
    fn bad_env_value_is_a_config_error() {
        let _guard = lock_env();
        std::env::set_var("FDI_SEED", "not-a-number");
        let err = resolve_simple(&base_flags("c.jsonl")).unwrap_err();
        std::env::remove_var("FDI_SEED");
        assert!(err.to_string().contains("FDI_SEED"), "{err}");
    }

    #[test]
    fn remote_backend_requires_endpoint() {
        let _guard = lock_env();
        let backend = BackendFlags {
            backend: Some(BackendKind::Remote),
            ..BackendFlags::default()
        };
        let err = Settings::resolve(
            &base_flags("c.jsonl"),
            &MaskFlags::default(),
            &DecodeFlags::default(),
            &backend,
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("endpoint"));
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let _guard = lock_env();
        let mask = MaskFlags {
            gamma: Some(1.5),
            ..MaskFlags::default()
        };
        assert!(Settings::resolve(
            &base_flags("c.jsonl"),
            &mask,
            &DecodeFlags::default(),
            &BackendFlags::default(),
            None,
        )
        .is_err());
    }

    #[test]
    fn missing_corpus_is_an_error() {
        let _guard = lock_env();
        let err = resolve_simple(&CommonFlags::default()).unwrap_err();
        assert!(err.to_string().contains("corpus"));
    }

    #[test]
    fn snapshot_is_stable_and_complete() {
        let _guard = lock_env();
        let s = resolve_simple(&base_flags("corpus.jsonl")).unwrap();
        let a = serde_json::to_string(&s.snapshot()).unwrap();
        let b = serde_json::to_string(&s.snapshot()).unwrap();
        assert_eq!(a, b);
        for key in ["gamma", "delta", "top_p", "corpus", "order"] {
            assert!(a.contains(key), "snapshot missing {key}: {a}");
        }
    }
}
