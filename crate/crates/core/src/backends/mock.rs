//! Deterministic backends that need no model weights.
//!
//! Every mock is a pure function of its inputs, so any pipeline run built
//! from them can be replayed exactly.

use std::collections::{BTreeMap, HashMap};

use crate::error::{AqsError, Result};
use crate::scalar::Scalar;
use crate::text::{normalize_tokens, normalize_word, split_sentences};

use super::{
    Answer, Embedder, Embedding, QuestionAnswerer, SentimentScorer, Summarizer, TokenDistribution,
    TokenId, TokenScorer, Vocabulary,
};

/// Table-driven next-token scorer.
///
/// Looks up `(query, prefix)` in its table; any pair not in the table puts all
/// mass on `</s>`.
#[derive(Debug, Clone, Default)]
pub struct MockScorer {
    vocab: Vocabulary,
    table: HashMap<(String, Vec<TokenId>), TokenDistribution<f64>>,
}

impl MockScorer {
    pub fn new(vocab: Vocabulary) -> Self {
        MockScorer {
            vocab,
            table: HashMap::new(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn insert(
        &mut self,
        query: &str,
        prefix: &[TokenId],
        dist: TokenDistribution<f64>,
    ) -> Result<()> {
        if let Some(&bad) = prefix.iter().find(|&&id| !self.vocab.contains(id)) {
            return Err(AqsError::VocabularyMismatch(bad));
        }
        if prefix.contains(&self.vocab.eos()) {
            return Err(AqsError::InvalidDistribution(
                "prefix must not contain </s>".into(),
            ));
        }
        dist.check_vocabulary(&self.vocab)?;
        self.table.insert((query.to_owned(), prefix.to_vec()), dist);
        Ok(())
    }

    /// Adds a table row written with surface strings; unseen words are added
    /// to the vocabulary.
    pub fn with_row(mut self, query: &str, prefix: &[&str], probs: &[(&str, f64)]) -> Result<Self> {
        let prefix: Vec<TokenId> = prefix.iter().map(|w| self.vocab.intern(w)).collect();
        let entries: Vec<(TokenId, f64)> = probs
            .iter()
            .map(|&(w, p)| (self.vocab.intern(w), p))
            .collect();
        let dist = TokenDistribution::new(entries)?;
        self.insert(query, &prefix, dist)?;
        Ok(self)
    }

    /// Builds a scorer whose complete sequences for `query` are exactly the
    /// given whitespace-tokenized paraphrases, each with probability
    /// proportional to its weight.
    pub fn from_paraphrases(query: &str, paraphrases: &[(&str, f64)]) -> Result<Self> {
        let mut scorer = MockScorer::default();
        scorer.add_paraphrases(query, paraphrases)?;
        Ok(scorer)
    }

    pub fn add_paraphrases(&mut self, query: &str, paraphrases: &[(&str, f64)]) -> Result<()> {
        // prefix -> next token -> accumulated weight
        let mut children: BTreeMap<Vec<TokenId>, BTreeMap<TokenId, f64>> = BTreeMap::new();
        for &(text, weight) in paraphrases {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(AqsError::InvalidConfig(format!(
                    "paraphrase weight {weight} for {text:?} must be positive"
                )));
            }
            let ids: Vec<TokenId> = text.split_whitespace().map(|w| self.vocab.intern(w)).collect();
            if ids.contains(&self.vocab.eos()) {
                return Err(AqsError::InvalidConfig(format!(
                    "paraphrase {text:?} contains </s>"
                )));
            }
            for k in 0..=ids.len() {
                let next = ids.get(k).copied().unwrap_or(self.vocab.eos());
                *children
                    .entry(ids[..k].to_vec())
                    .or_default()
                    .entry(next)
                    .or_insert(0.0) += weight;
            }
        }
        for (prefix, next) in children {
            let total: f64 = next.values().sum();
            let dist = TokenDistribution::new(next.into_iter().map(|(id, w)| (id, w / total)))?;
            self.insert(query, &prefix, dist)?;
        }
        Ok(())
    }
}

impl<T: Scalar> TokenScorer<T> for MockScorer {
    fn eos_id(&self) -> TokenId {
        self.vocab.eos()
    }

    fn vocabulary_size(&self) -> usize {
        self.vocab.len()
    }

    fn score_next_tokens(&self, query: &str, prefix: &[TokenId]) -> Result<TokenDistribution<T>> {
        if query.is_empty() {
            return Err(AqsError::EmptyInput);
        }
        if let Some(&bad) = prefix.iter().find(|&&id| !self.vocab.contains(id)) {
            return Err(AqsError::VocabularyMismatch(bad));
        }
        // No allocation-free lookup on a (String, Vec) key; fine for a mock.
        match self.table.get(&(query.to_owned(), prefix.to_vec())) {
            Some(dist) => Ok(dist.cast()),
            None => Ok(TokenDistribution::point(self.vocab.eos())),
        }
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<String> {
        self.vocab.detokenize(tokens)
    }
}

/// Extractive QA: returns the context sentence sharing the most distinct
/// normalized unigrams with the query, earliest sentence on ties.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockQa {
    /// Return an empty answer instead of a zero-overlap sentence.
    pub abstain_on_zero_overlap: bool,
}

impl MockQa {
    pub fn abstaining() -> Self {
        MockQa {
            abstain_on_zero_overlap: true,
        }
    }
}

impl QuestionAnswerer for MockQa {
    fn answer_question(&self, query: &str, context: &str) -> Result<Answer> {
        if query.trim().is_empty() || context.trim().is_empty() {
            return Err(AqsError::EmptyInput);
        }
        let query_terms: std::collections::HashSet<String> =
            normalize_tokens(query).into_iter().collect();
        let mut best: Option<(&str, usize)> = None;
        for sentence in split_sentences(context) {
            let terms: std::collections::HashSet<String> =
                normalize_tokens(sentence).into_iter().collect();
            let overlap = terms.intersection(&query_terms).count();
            if best.is_none_or(|(_, b)| overlap > b) {
                best = Some((sentence, overlap));
            }
        }
        let Some((sentence, overlap)) = best else {
            return Ok(Answer::new(""));
        };
        if overlap == 0 && self.abstain_on_zero_overlap {
            return Ok(Answer::new(""));
        }
        let mut answer = Answer::new(sentence);
        answer.raw_score = Some(overlap as f64);
        Ok(answer)
    }
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hashed bag-of-words embedder, L2-normalized.
///
/// Each word is normalized (lowercase, punctuation stripped); a word that
/// normalizes to nothing is hashed raw. Empty text yields the zero vector.
#[derive(Debug, Clone, Copy)]
pub struct MockEmbedder {
    dim: usize,
}

impl Default for MockEmbedder {
    fn default() -> Self {
        MockEmbedder { dim: 64 }
    }
}

impl MockEmbedder {
    pub fn with_dim(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        MockEmbedder { dim }
    }

    pub fn bucket(&self, word: &str) -> usize {
        let norm = normalize_word(word);
        let key = if norm.is_empty() { word } else { norm.as_str() };
        (fnv1a(key.as_bytes()) % self.dim as u64) as usize
    }

    fn embed_words<'a, T: Scalar>(&self, words: impl Iterator<Item = &'a str>) -> Embedding<T> {
        let mut counts = vec![0.0f64; self.dim];
        for w in words {
            counts[self.bucket(w)] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            counts.iter_mut().for_each(|c| *c /= norm);
        }
        Embedding::new(counts.into_iter().map(T::from_f64_lossy).collect())
    }
}

impl<T: Scalar> Embedder<T> for MockEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Result<Embedding<T>> {
        Ok(self.embed_words(text.split_whitespace()))
    }

    fn embed_tokens(&self, text: &str) -> Result<Vec<Embedding<T>>> {
        Ok(text
            .split_whitespace()
            .map(|w| self.embed_words(std::iter::once(w)))
            .collect())
    }
}

/// Returns the first sentence, truncated to `max_tokens` whitespace tokens.
#[derive(Debug, Clone, Copy)]
pub struct MockSummarizer {
    pub max_tokens: usize,
}

impl Default for MockSummarizer {
    fn default() -> Self {
        MockSummarizer { max_tokens: 30 }
    }
}

impl Summarizer for MockSummarizer {
    fn summarize_text(&self, text: &str) -> Result<String> {
        let first = split_sentences(text)
            .into_iter()
            .next()
            .ok_or(AqsError::EmptyInput)?;
        let words: Vec<&str> = first.split_whitespace().collect();
        if words.len() <= self.max_tokens {
            Ok(first.to_owned())
        } else {
            Ok(words[..self.max_tokens].join(" "))
        }
    }
}

pub const POSITIVE_LEXICON: [&str; 20] = [
    "good", "great", "excellent", "happy", "satisfied", "pleased", "thanks", "thank", "helpful",
    "wonderful", "love", "nice", "clean", "quick", "appreciate", "resolved", "fine", "kind",
    "safe", "glad",
];

pub const NEGATIVE_LEXICON: [&str; 20] = [
    "bad", "poor", "terrible", "angry", "unhappy", "dissatisfied", "complaint", "leak",
    "leaking", "broken", "dirty", "slow", "noisy", "rude", "damage", "unsatisfactory", "illegal",
    "annoyed", "awful", "worst",
];

/// Lexicon polarity: `(positive hits - negative hits) / max(1, tokens)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockSentiment;

impl<T: Scalar> SentimentScorer<T> for MockSentiment {
    fn sentiment_score(&self, text: &str) -> Result<T> {
        let tokens = normalize_tokens(text);
        let pos = tokens
            .iter()
            .filter(|t| POSITIVE_LEXICON.contains(&t.as_str()))
            .count() as f64;
        let neg = tokens
            .iter()
            .filter(|t| NEGATIVE_LEXICON.contains(&t.as_str()))
            .count() as f64;
        Ok(T::from_f64_lossy((pos - neg) / tokens.len().max(1) as f64))
    }
}

/// Embedder with hand-assigned vectors, for tests.
///
/// A text without its own vector is split on `". "` (trailing `.` trimmed from
/// each part); if every part has a vector the parts are summed. This gives a
/// concatenated group text a well-defined embedding.
#[derive(Debug, Clone, Default)]
pub struct ScriptedEmbedder {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl ScriptedEmbedder {
    pub fn new(dim: usize) -> Self {
        ScriptedEmbedder {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn with(mut self, text: &str, vector: Vec<f64>) -> Self {
        self.insert(text, vector);
        self
    }

    pub fn insert(&mut self, text: &str, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dim, "scripted vector has wrong dimension");
        self.vectors.insert(text.to_owned(), vector);
    }

    /// Unit vector at `degrees` in the plane, padded with zeros.
    pub fn unit_at(dim: usize, degrees: f64) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        let r = degrees.to_radians();
        v[0] = r.cos();
        v[1] = r.sin();
        v
    }

    fn lookup(&self, text: &str) -> Result<Vec<f64>> {
        if let Some(v) = self.vectors.get(text) {
            return Ok(v.clone());
        }
        let mut sum = vec![0.0; self.dim];
        for part in text.split(". ") {
            let part = part.strip_suffix('.').unwrap_or(part);
            let v = self.vectors.get(part).ok_or_else(|| {
                AqsError::BackendUnavailable(format!("no scripted vector for {part:?}"))
            })?;
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
        Ok(sum)
    }
}

impl<T: Scalar> Embedder<T> for ScriptedEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Result<Embedding<T>> {
        let v = self.lookup(text)?;
        Ok(Embedding::new(v.into_iter().map(T::from_f64_lossy).collect()))
    }

    fn embed_tokens(&self, text: &str) -> Result<Vec<Embedding<T>>> {
        text.split_whitespace().map(|w| self.embed_text(w)).collect()
    }
}
