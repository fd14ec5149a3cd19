//! Client for a single JSON inference endpoint.

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{AqsError, Result};
use crate::scalar::Scalar;

use super::protocol::{field, parse_real_rows, parse_reals, InferenceRequest, InferenceResponse};
use super::{
    Answer, Embedder, Embedding, QuestionAnswerer, SentimentScorer, Summarizer, TokenDistribution,
    TokenId, TokenScorer, EOS_SURFACE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Extra attempts after the first failure.
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub max_in_flight: usize,
    pub eos_id: TokenId,
    /// Expected embedding dimension; learned from the first response if unset.
    pub embedding_dim: Option<usize>,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: String::new(),
            timeout_ms: 30_000,
            retries: 3,
            backoff_ms: 100,
            max_backoff_ms: 5_000,
            max_in_flight: 8,
            eos_id: 0,
            embedding_dim: None,
        }
    }
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            ..Default::default()
        }
    }

    /// Delay before retry number `attempt` (0-based), doubling up to the cap.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

/// Counting semaphore bounding concurrent requests.
struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.count.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

enum Attempt {
    Retryable(String),
    Fatal(AqsError),
}

pub struct RemoteClient {
    config: RemoteConfig,
    agent: ureq::Agent,
    in_flight: InFlight,
    dim: OnceLock<usize>,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(AqsError::InvalidConfig("remote endpoint is not set".into()));
        }
        if config.max_in_flight == 0 {
            return Err(AqsError::InvalidConfig("max_in_flight must be positive".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let dim = OnceLock::new();
        if let Some(d) = config.embedding_dim {
            let _ = dim.set(d);
        }
        Ok(RemoteClient {
            in_flight: InFlight {
                count: Mutex::new(0),
                freed: Condvar::new(),
                limit: config.max_in_flight,
            },
            config,
            agent,
            dim,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// One logical round-trip. Transport failures and 5xx/429 statuses are
    /// retried with exponential backoff; a well-formed error response is
    /// returned as-is.
    pub fn remote_infer(&self, request: &InferenceRequest) -> Result<InferenceResponse> {
        let body = serde_json::to_string(request)
            .map_err(|e| AqsError::ProtocolError(format!("cannot encode request: {e}")))?;
        let _permit = self.in_flight.acquire();
        let attempts = if request.task.is_idempotent() {
            self.config.retries + 1
        } else {
            1
        };
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff(attempt - 1));
            }
            match self.send_once(&body) {
                Ok(resp) => return Ok(resp),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(msg)) => {
                    log::debug!("attempt {} to {} failed: {msg}", attempt + 1, self.config.endpoint);
                    last = msg;
                }
            }
        }
        Err(AqsError::BackendUnavailable(format!(
            "{} unreachable after {attempts} attempts: {last}",
            self.config.endpoint
        )))
    }

    fn send_once(&self, body: &str) -> std::result::Result<InferenceResponse, Attempt> {
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Retryable(format!("HTTP {status}")));
        }
        InferenceResponse::parse(&text).map_err(Attempt::Fatal)
    }

    fn call(&self, request: InferenceRequest) -> Result<serde_json::Value> {
        self.remote_infer(&request)?.into_payload()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        let want = *self.dim.get_or_init(|| got);
        if want != got {
            return Err(AqsError::ProtocolError(format!(
                "embedding has {got} values, expected {want}"
            )));
        }
        Ok(())
    }
}

impl QuestionAnswerer for RemoteClient {
    fn answer_question(&self, query: &str, context: &str) -> Result<Answer> {
        let payload = self.call(InferenceRequest::qa(query, context))?;
        let text = field(&payload, "text")?
            .as_str()
            .ok_or_else(|| AqsError::ProtocolError("qa text is not a string".into()))?;
        let mut answer = Answer::new(text);
        answer.raw_score = payload.get("score").and_then(serde_json::Value::as_f64);
        Ok(answer)
    }
}

impl<T: Scalar> Embedder<T> for RemoteClient {
    fn dim(&self) -> usize {
        self.dim.get().copied().unwrap_or(0)
    }

    fn embed_text(&self, text: &str) -> Result<Embedding<T>> {
        let values = parse_reals(&self.call(InferenceRequest::embed(text))?, "embedding")?;
        self.check_dim(values.len())?;
        Ok(Embedding::new(values.into_iter().map(T::from_f64_lossy).collect()))
    }

    fn embed_tokens(&self, text: &str) -> Result<Vec<Embedding<T>>> {
        let rows = parse_real_rows(&self.call(InferenceRequest::embed_tokens(text))?, "embeddings")?;
        let expected = text.split_whitespace().count();
        if rows.len() != expected {
            return Err(AqsError::ProtocolError(format!(
                "{} token embeddings for {expected} tokens",
                rows.len()
            )));
        }
        rows.into_iter()
            .map(|row| {
                self.check_dim(row.len())?;
                Ok(Embedding::new(row.into_iter().map(T::from_f64_lossy).collect()))
            })
            .collect()
    }
}

impl Summarizer for RemoteClient {
    fn summarize_text(&self, text: &str) -> Result<String> {
        if text.trim().is_empty() {
            return Err(AqsError::EmptyInput);
        }
        let payload = self.call(InferenceRequest::summarize(text))?;
        let summary = field(&payload, "summary")?
            .as_str()
            .ok_or_else(|| AqsError::ProtocolError("summary is not a string".into()))?;
        Ok(summary.to_owned())
    }
}

impl<T: Scalar> SentimentScorer<T> for RemoteClient {
    fn sentiment_score(&self, text: &str) -> Result<T> {
        let payload = self.call(InferenceRequest::sentiment(text))?;
        let score = field(&payload, "score")?
            .as_f64()
            .ok_or_else(|| AqsError::ProtocolError("sentiment score is not a number".into()))?;
        Ok(T::from_f64_lossy(score.clamp(-1.0, 1.0)))
    }
}

/// Remote next-token scorer. Token surfaces arrive with each distribution and
/// are cached for detokenization.
pub struct RemoteScorer {
    client: Arc<RemoteClient>,
    surfaces: Mutex<HashMap<TokenId, String>>,
}

impl RemoteScorer {
    pub fn new(client: Arc<RemoteClient>) -> Self {
        RemoteScorer {
            client,
            surfaces: Mutex::new(HashMap::new()),
        }
    }
}

impl<T: Scalar> TokenScorer<T> for RemoteScorer {
    fn eos_id(&self) -> TokenId {
        self.client.config.eos_id
    }

    fn vocabulary_size(&self) -> usize {
        self.surfaces.lock().map(|s| s.len()).unwrap_or(0).max(1)
    }

    fn score_next_tokens(&self, query: &str, prefix: &[TokenId]) -> Result<TokenDistribution<T>> {
        if query.is_empty() {
            return Err(AqsError::EmptyInput);
        }
        let payload = self.client.call(InferenceRequest::score(query, prefix))?;
        let entries = field(&payload, "entries")?
            .as_array()
            .ok_or_else(|| AqsError::ProtocolError("entries is not an array".into()))?;
        let mut probs = Vec::with_capacity(entries.len());
        let mut surfaces = self.surfaces.lock().unwrap_or_else(|e| e.into_inner());
        for entry in entries {
            let id = entry
                .get("id")
                .and_then(serde_json::Value::as_u64)
                .and_then(|v| TokenId::try_from(v).ok())
                .ok_or_else(|| AqsError::ProtocolError("entry without a token id".into()))?;
            let prob = entry
                .get("prob")
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| AqsError::ProtocolError("entry without a probability".into()))?;
            if let Some(s) = entry.get("surface").and_then(serde_json::Value::as_str) {
                if id == self.client.config.eos_id && s != EOS_SURFACE {
                    return Err(AqsError::ProtocolError(format!(
                        "token {id} is configured as </s> but the server calls it {s:?}"
                    )));
                }
                surfaces.entry(id).or_insert_with(|| s.to_owned());
            }
            probs.push((id, T::from_f64_lossy(prob)));
        }
        if let Some(&bad) = prefix.iter().find(|id| !surfaces.contains_key(id)) {
            return Err(AqsError::VocabularyMismatch(bad));
        }
        TokenDistribution::new(probs)
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        let surfaces = self.surfaces.lock().unwrap_or_else(|e| e.into_inner());
        let eos = self.client.config.eos_id;
        let words = tokens
            .iter()
            .filter(|&&id| id != eos)
            .map(|id| {
                surfaces
                    .get(id)
                    .map(String::as_str)
                    .ok_or(AqsError::VocabularyMismatch(*id))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(words.join(" "))
    }
}
