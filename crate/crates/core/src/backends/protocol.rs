//! JSON request/response scheme spoken with an inference endpoint.
//!
//! Requests are `{"task": "...", "payload": {...}}`; responses are
//! `{"status": "ok", "payload": {...}}` or `{"status": "error", "message": "..."}`.
//!
//! | task           | request payload            | response payload                                  |
//! |----------------|----------------------------|---------------------------------------------------|
//! | `score`        | `{query, prefix: [ids]}`   | `{entries: [{id, surface, prob}]}`                |
//! | `qa`           | `{query, context}`         | `{text, score?}`                                  |
//! | `embed`        | `{text}`                   | `{embedding: [reals]}`                            |
//! | `embed_tokens` | `{text}`                   | `{embeddings: [[reals]]}`                         |
//! | `summarize`    | `{text}`                   | `{summary}`                                       |
//! | `sentiment`    | `{text}`                   | `{score}`                                         |

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{AqsError, Result};
use crate::scalar::Scalar;

use super::{BackendSuite, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Score,
    Qa,
    Embed,
    EmbedTokens,
    Summarize,
    Sentiment,
}

impl Task {
    /// Every task is a pure inference call and safe to repeat.
    pub fn is_idempotent(self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRequest {
    pub task: Task,
    pub payload: Map<String, Value>,
}

impl InferenceRequest {
    fn with(task: Task, payload: Value) -> Self {
        let Value::Object(payload) = payload else {
            unreachable!("payloads are built as objects")
        };
        InferenceRequest { task, payload }
    }

    pub fn score(query: &str, prefix: &[TokenId]) -> Self {
        Self::with(Task::Score, json!({ "query": query, "prefix": prefix }))
    }

    pub fn qa(query: &str, context: &str) -> Self {
        Self::with(Task::Qa, json!({ "query": query, "context": context }))
    }

    pub fn embed(text: &str) -> Self {
        Self::with(Task::Embed, json!({ "text": text }))
    }

    pub fn embed_tokens(text: &str) -> Self {
        Self::with(Task::EmbedTokens, json!({ "text": text }))
    }

    pub fn summarize(text: &str) -> Self {
        Self::with(Task::Summarize, json!({ "text": text }))
    }

    pub fn sentiment(text: &str) -> Self {
        Self::with(Task::Sentiment, json!({ "text": text }))
    }

    pub fn str_field(&self, name: &str) -> Result<&str> {
        self.payload
            .get(name)
            .and_then(Value::as_str)
            .ok_or_else(|| AqsError::ProtocolError(format!("missing string field {name:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResponse {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub payload: Value,
    #[serde(default, rename = "message", skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
}

impl InferenceResponse {
    pub fn ok(payload: Value) -> Self {
        InferenceResponse {
            status: Status::Ok,
            payload,
            error_message: None,
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        let mut message = message.into();
        if message.is_empty() {
            message = "unspecified error".into();
        }
        InferenceResponse {
            status: Status::Error,
            payload: Value::Null,
            error_message: Some(message),
        }
    }

    /// Parses a response body, enforcing that error responses carry a message.
    pub fn parse(body: &str) -> Result<Self> {
        let resp: InferenceResponse = serde_json::from_str(body)
            .map_err(|e| AqsError::ProtocolError(format!("malformed response body: {e}")))?;
        if resp.status == Status::Error
            && resp.error_message.as_deref().is_none_or(str::is_empty)
        {
            return Err(AqsError::ProtocolError(
                "error response without a message".into(),
            ));
        }
        Ok(resp)
    }

    /// The payload of an ok response; an error response becomes
    /// [`AqsError::BackendUnavailable`] carrying the server message.
    pub fn into_payload(self) -> Result<Value> {
        match self.status {
            Status::Ok => Ok(self.payload),
            Status::Error => Err(AqsError::BackendUnavailable(
                self.error_message.unwrap_or_default(),
            )),
        }
    }
}

fn reals(value: &Value, what: &str) -> Result<Vec<f64>> {
    value
        .as_array()
        .ok_or_else(|| AqsError::ProtocolError(format!("{what} is not an array")))?
        .iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| AqsError::ProtocolError(format!("{what} has a non-numeric entry")))
        })
        .collect()
}

pub(crate) fn field<'a>(payload: &'a Value, name: &str) -> Result<&'a Value> {
    payload
        .get(name)
        .ok_or_else(|| AqsError::ProtocolError(format!("response payload lacks {name:?}")))
}

pub(crate) fn parse_reals(payload: &Value, name: &str) -> Result<Vec<f64>> {
    reals(field(payload, name)?, name)
}

pub(crate) fn parse_real_rows(payload: &Value, name: &str) -> Result<Vec<Vec<f64>>> {
    field(payload, name)?
        .as_array()
        .ok_or_else(|| AqsError::ProtocolError(format!("{name} is not an array")))?
        .iter()
        .map(|row| reals(row, name))
        .collect()
}

/// Serves one request with a backend suite. Backend failures become error
/// responses; only a malformed request is reported as such too.
pub fn handle_request<T: Scalar>(suite: &BackendSuite<T>, req: &InferenceRequest) -> InferenceResponse {
    match dispatch(suite, req) {
        Ok(payload) => InferenceResponse::ok(payload),
        Err(e) => InferenceResponse::error(e.to_string()),
    }
}

fn dispatch<T: Scalar>(suite: &BackendSuite<T>, req: &InferenceRequest) -> Result<Value> {
    let f = |v: T| v.to_f64_lossy();
    match req.task {
        Task::Score => {
            let query = req.str_field("query")?;
            let prefix: Vec<TokenId> = req
                .payload
                .get("prefix")
                .and_then(Value::as_array)
                .ok_or_else(|| AqsError::ProtocolError("missing array field \"prefix\"".into()))?
                .iter()
                .map(|v| {
                    v.as_u64()
                        .and_then(|id| TokenId::try_from(id).ok())
                        .ok_or_else(|| AqsError::ProtocolError("prefix holds a non-id".into()))
                })
                .collect::<Result<_>>()?;
            let dist = suite.scorer.score_next_tokens(query, &prefix)?;
            let entries = dist
                .entries()
                .map(|(id, p)| {
                    Ok(json!({
                        "id": id,
                        "surface": suite.scorer.detokenize(&[id]).map(|s| if s.is_empty() { super::EOS_SURFACE.to_owned() } else { s })?,
                        "prob": f(p),
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(json!({ "entries": entries }))
        }
        Task::Qa => {
            let a = suite
                .qa
                .answer_question(req.str_field("query")?, req.str_field("context")?)?;
            Ok(json!({ "text": a.text, "score": a.raw_score }))
        }
        Task::Embed => {
            let e = suite.embedder.embed_text(req.str_field("text")?)?;
            Ok(json!({ "embedding": e.values().iter().map(|&v| f(v)).collect::<Vec<_>>() }))
        }
        Task::EmbedTokens => {
            let rows: Vec<Vec<f64>> = suite
                .embedder
                .embed_tokens(req.str_field("text")?)?
                .iter()
                .map(|e| e.values().iter().map(|&v| f(v)).collect())
                .collect();
            Ok(json!({ "embeddings": rows }))
        }
        Task::Summarize => Ok(json!({
            "summary": suite.summarizer.summarize_text(req.str_field("text")?)?
        })),
        Task::Sentiment => Ok(json!({
            "score": f(suite.sentiment.sentiment_score(req.str_field("text")?)?)
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let r = InferenceRequest::score("q", &[1, 2]);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v, json!({"task": "score", "payload": {"query": "q", "prefix": [1, 2]}}));
        let r = InferenceRequest::embed_tokens("a b");
        assert_eq!(serde_json::to_value(&r).unwrap()["task"], "embed_tokens");
    }

    #[test]
    fn response_parsing() {
        let ok = InferenceResponse::parse(r#"{"status":"ok","payload":{"summary":"x"}}"#).unwrap();
        assert_eq!(ok.into_payload().unwrap()["summary"], "x");

        let err = InferenceResponse::parse(r#"{"status":"error","message":"boom"}"#).unwrap();
        assert_eq!(err.error_message.as_deref(), Some("boom"));
        assert!(matches!(err.into_payload(), Err(AqsError::BackendUnavailable(m)) if m == "boom"));

        assert!(matches!(
            InferenceResponse::parse(r#"{"status":"error"}"#),
            Err(AqsError::ProtocolError(_))
        ));
        assert!(matches!(
            InferenceResponse::parse("<html>"),
            Err(AqsError::ProtocolError(_))
        ));
    }

    #[test]
    fn error_constructor_never_has_empty_message() {
        assert!(!InferenceResponse::error("").error_message.unwrap().is_empty());
    }
}
