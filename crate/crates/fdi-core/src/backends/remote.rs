//! Remote scoring backend: delegates next-token scoring to an HTTP service.
//!
//! Protocol: `POST {base}/v1/score` with `{"context": ["tok", ...],
//! "top_k": n?}`; the service answers `{"tokens": [...], "scores": [...]}`
//! with parallel arrays. Tokens the service does not return are filled with
//! a floor score well below the minimum returned one, so they effectively
//! drop out of sampling without disturbing the distribution shape.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{InfillBackend, Vocabulary};

/// Margin subtracted from the lowest returned score to floor absent tokens.
const FLOOR_MARGIN: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct RetryConfig {
    /// Total attempts, first try included.
    pub max_attempts: u32,
    /// Per-request timeout.
    pub timeout: Duration,
    /// Backoff before retry `n` is `base * 2^(n-1)`.
    pub backoff_base: Duration,
}

impl Default for RetryConfig {
    fn default() -> Self {
        RetryConfig {
            max_attempts: 3,
            timeout: Duration::from_secs(10),
            backoff_base: Duration::from_millis(100),
        }
    }
}

pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    vocab: Vocabulary,
    retry: RetryConfig,
    top_k: Option<usize>,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    context: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    top_k: Option<usize>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    tokens: Vec<String>,
    scores: Vec<f64>,
}

impl RemoteBackend {
    /// `base_url` is the service root; the `/v1/score` path is appended.
    /// The vocabulary defines the id space scores are mapped back into.
    pub fn new(
        base_url: &str,
        vocab: Vocabulary,
        retry: RetryConfig,
        top_k: Option<usize>,
    ) -> Result<RemoteBackend> {
        let client = reqwest::blocking::Client::builder()
            .timeout(retry.timeout)
            .build()
            .map_err(|e| Error::InvalidParams(format!("http client: {e}")))?;
        Ok(RemoteBackend {
            client,
            endpoint: format!("{}/v1/score", base_url.trim_end_matches('/')),
            vocab,
            retry,
            top_k,
        })
    }

    /// One request/response cycle; `Ok(Err(_))` means retriable.
    fn attempt(&self, req: &ScoreRequest) -> std::result::Result<ScoreResponse, (bool, Error)> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(req)
            .send()
            .map_err(|e| {
                (
                    true,
                    Error::RemoteTransport {
                        attempts: 0,
                        message: e.to_string(),
                    },
                )
            })?;
        let status = resp.status();
        if !status.is_success() {
            let retriable = status.is_server_error() || status.as_u16() == 408 || status.as_u16() == 429;
            let body = resp.text().unwrap_or_default();
            return Err((
                retriable,
                Error::RemoteRejected {
                    status: status.as_u16(),
                    message: body.chars().take(200).collect(),
                },
            ));
        }
        resp.json::<ScoreResponse>()
            .map_err(|e| (false, Error::InvalidResponse(e.to_string())))
    }
}

impl InfillBackend for RemoteBackend {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn score_next(&self, context: &[u32]) -> Result<Vec<f64>> {
        let req = ScoreRequest {
            context: context.iter().map(|&id| self.vocab.token(id)).collect(),
            top_k: self.top_k,
        };
        let mut last_err = None;
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                std::thread::sleep(self.retry.backoff_base * 2u32.pow(attempt - 2));
            }
            match self.attempt(&req) {
                Ok(resp) => return self.fill_scores(resp),
                Err((retriable, err)) => {
                    if !retriable {
                        return Err(err);
                    }
                    last_err = Some(err);
                }
            }
        }
        let message = match last_err {
            Some(Error::RemoteTransport { message, .. }) => message,
            Some(other) => other.to_string(),
            None => "no attempts made".into(),
        };
        Err(Error::RemoteTransport {
            attempts: self.retry.max_attempts,
            message,
        })
    }
}

impl RemoteBackend {
    fn fill_scores(&self, resp: ScoreResponse) -> Result<Vec<f64>> {
        if resp.tokens.len() != resp.scores.len() {
            return Err(Error::InvalidResponse(format!(
                "{} tokens but {} scores",
                resp.tokens.len(),
                resp.scores.len()
            )));
        }
        if resp.tokens.is_empty() {
            return Err(Error::InvalidResponse("empty score list".into()));
        }
        for (i, s) in resp.scores.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::NonFiniteScore(i));
            }
        }
        let min = resp.scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut out = vec![min - FLOOR_MARGIN; self.vocab.len()];
        for (tok, score) in resp.tokens.iter().zip(&resp.scores) {
            // Tokens outside our vocabulary cannot be sampled; drop them.
            if let Some(id) = self.vocab.id_of(tok) {
                out[id as usize] = *score;
            }
        }
        Ok(out)
    }
}
