//! Model capabilities the pipeline composes.
//!
//! Five traits cover everything the summarizer needs from models: next-token
//! scoring for paraphrase generation, extractive question answering, text and
//! token embeddings, generic summarization and sentiment scoring. [`mock`]
//! holds deterministic implementations, [`remote`] a JSON-over-HTTP client.

pub mod mock;
pub mod protocol;
pub mod remote;
pub mod stub;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{AqsError, Result};
use crate::scalar::Scalar;

pub type TokenId = u32;

/// Surface form of the end-of-sequence token.
pub const EOS_SURFACE: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub id: TokenId,
    pub surface: String,
}

/// A word-level vocabulary with exactly one end-of-sequence token at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Token>,
    by_surface: HashMap<String, TokenId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    /// A vocabulary holding only `</s>`.
    pub fn new() -> Self {
        let mut by_surface = HashMap::new();
        by_surface.insert(EOS_SURFACE.to_owned(), 0);
        Vocabulary {
            tokens: vec![Token {
                id: 0,
                surface: EOS_SURFACE.to_owned(),
            }],
            by_surface,
        }
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self::new();
        for w in words {
            v.intern(w);
        }
        v
    }

    /// Returns the id of `surface`, adding it if unseen.
    pub fn intern(&mut self, surface: &str) -> TokenId {
        if let Some(&id) = self.by_surface.get(surface) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(Token {
            id,
            surface: surface.to_owned(),
        });
        self.by_surface.insert(surface.to_owned(), id);
        id
    }

    pub fn eos(&self) -> TokenId {
        0
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, id: TokenId) -> bool {
        (id as usize) < self.tokens.len()
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.by_surface.get(surface).copied()
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(|t| t.surface.as_str())
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Joins surfaces with single spaces, dropping `</s>`.
    pub fn detokenize(&self, ids: &[TokenId]) -> Result<String> {
        let mut words = Vec::with_capacity(ids.len());
        for &id in ids {
            if id == self.eos() {
                continue;
            }
            words.push(self.surface(id).ok_or(AqsError::VocabularyMismatch(id))?);
        }
        Ok(words.join(" "))
    }
}

/// Probability of each possible next token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution<T = f64> {
    entries: BTreeMap<TokenId, T>,
}

impl<T: Scalar> TokenDistribution<T> {
    /// Validates that every probability lies in `[0, 1]` and that they sum to
    /// one within [`Scalar::mass_tolerance`].
    pub fn new(entries: impl IntoIterator<Item = (TokenId, T)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (id, p) in entries {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(AqsError::InvalidDistribution(format!(
                    "probability {p} for token {id} outside [0, 1]"
                )));
            }
            if map.insert(id, p).is_some() {
                return Err(AqsError::InvalidDistribution(format!(
                    "token {id} listed twice"
                )));
            }
        }
        let dist = TokenDistribution { entries: map };
        let total = dist.total();
        if (total - T::one()).abs() > T::mass_tolerance() {
            return Err(AqsError::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(dist)
    }

    /// All mass on a single token.
    pub fn point(id: TokenId) -> Self {
        TokenDistribution {
            entries: BTreeMap::from([(id, T::one())]),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (TokenId, T)> + '_ {
        self.entries.iter().map(|(&id, &p)| (id, p))
    }

    pub fn prob(&self, id: TokenId) -> T {
        self.entries.get(&id).copied().unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.entries.values().fold(T::zero(), |acc, &p| acc + p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        match self.entries.keys().find(|&&id| !vocab.contains(id)) {
            Some(&id) => Err(AqsError::VocabularyMismatch(id)),
            None => Ok(()),
        }
    }

    pub fn cast<U: Scalar>(&self) -> TokenDistribution<U> {
        TokenDistribution {
            entries: self
                .entries
                .iter()
                .map(|(&id, &p)| (id, U::from_f64_lossy(p.to_f64_lossy())))
                .collect(),
        }
    }
}

/// One extracted answer. `source_query_index` is the position of the query
/// (original or paraphrase) that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub source_query_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_score: Option<f64>,
}

impl Answer {
    pub fn new(text: impl Into<String>) -> Self {
        Answer {
            text: text.into(),
            source_query_index: 0,
            raw_score: None,
        }
    }

    pub fn from_query(mut self, index: usize) -> Self {
        self.source_query_index = index;
        self
    }

    pub fn is_abstention(&self) -> bool {
        self.text.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T = f64> {
    values: Vec<T>,
}

impl<T: Scalar> Embedding<T> {
    pub fn new(values: Vec<T>) -> Self {
        Embedding { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    /// `None` if either vector has zero norm.
    pub fn cosine(&self, other: &Embedding<T>) -> Option<T> {
        crate::scalar::cosine(&self.values, &other.values)
    }
}

pub trait TokenScorer<T: Scalar>: Send + Sync {
    /// Id of the end-of-sequence token.
    fn eos_id(&self) -> TokenId;

    /// Number of tokens the scorer may emit.
    fn vocabulary_size(&self) -> usize;

    /// `P(w | query, prefix)` for every token `w`.
    fn score_next_tokens(&self, query: &str, prefix: &[TokenId]) -> Result<TokenDistribution<T>>;

    /// Turns a generated token sequence into text; `</s>` is dropped.
    fn detokenize(&self, tokens: &[TokenId]) -> Result<String>;
}

pub trait QuestionAnswerer: Send + Sync {
    /// Extracts an answer to `query` from `context`. Empty text means the
    /// backend abstained.
    fn answer_question(&self, query: &str, context: &str) -> Result<Answer>;
}

pub trait Embedder<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn embed_text(&self, text: &str) -> Result<Embedding<T>>;

    /// One embedding per whitespace-delimited token.
    fn embed_tokens(&self, text: &str) -> Result<Vec<Embedding<T>>>;
}

pub trait Summarizer: Send + Sync {
    fn summarize_text(&self, text: &str) -> Result<String>;
}

pub trait SentimentScorer<T: Scalar>: Send + Sync {
    /// Polarity in `[-1, 1]`.
    fn sentiment_score(&self, text: &str) -> Result<T>;
}

/// The five capabilities the pipeline and the evaluation harness need.
pub struct BackendSuite<T: Scalar = f64> {
    pub scorer: Arc<dyn TokenScorer<T>>,
    pub qa: Arc<dyn QuestionAnswerer>,
    pub embedder: Arc<dyn Embedder<T>>,
    pub summarizer: Arc<dyn Summarizer>,
    pub sentiment: Arc<dyn SentimentScorer<T>>,
}

impl<T: Scalar> Clone for BackendSuite<T> {
    fn clone(&self) -> Self {
        BackendSuite {
            scorer: Arc::clone(&self.scorer),
            qa: Arc::clone(&self.qa),
            embedder: Arc::clone(&self.embedder),
            summarizer: Arc::clone(&self.summarizer),
            sentiment: Arc::clone(&self.sentiment),
        }
    }
}

impl<T: Scalar> BackendSuite<T> {
    /// All-mock suite with the given scorer.
    pub fn mock(scorer: mock::MockScorer) -> Self {
        BackendSuite {
            scorer: Arc::new(scorer),
            qa: Arc::new(mock::MockQa::default()),
            embedder: Arc::new(mock::MockEmbedder::default()),
            summarizer: Arc::new(mock::MockSummarizer::default()),
            sentiment: Arc::new(mock::MockSentiment),
        }
    }

    /// Every capability served by one remote endpoint.
    pub fn remote(client: remote::RemoteClient) -> Self {
        let client = Arc::new(client);
        BackendSuite {
            scorer: Arc::new(remote::RemoteScorer::new(Arc::clone(&client))),
            qa: client.clone(),
            embedder: client.clone(),
            summarizer: client.clone(),
            sentiment: client,
        }
    }

    pub fn with_qa(mut self, qa: Arc<dyn QuestionAnswerer>) -> Self {
        self.qa = qa;
        self
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn Embedder<T>>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn with_summarizer(mut self, summarizer: Arc<dyn Summarizer>) -> Self {
        self.summarizer = summarizer;
        self
    }
}
