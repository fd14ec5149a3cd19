//! Evaluation metrics and corpus-level reporting.
//!
//! All lexical metrics share one normalization: lowercase, strip
//! punctuation, split on whitespace.

pub mod rouge;
pub mod simulation;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use rouge::{lcs_len, rouge_l, rouge_n};
pub use simulation::{simulate_majority_success, MajorityOutcome, MajoritySimConfig};

use crate::backends::{Answer, BackendSuite, Embedder};
use crate::error::{AqsError, Result};
use crate::scalar::{f1, Scalar};
use crate::text::normalize_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScores<T = f64> {
    pub r1: T,
    pub r2: T,
    pub rl: T,
}

impl<T: Scalar> RougeScores<T> {
    pub fn compute(prediction: &str, reference: &str) -> Self {
        RougeScores {
            r1: rouge_n(prediction, reference, 1),
            r2: rouge_n(prediction, reference, 2),
            rl: rouge_l(prediction, reference),
        }
    }
}

/// Greedy token matching over token embeddings: precision averages, over
/// prediction tokens, the best cosine to any reference token; recall the
/// reverse. Returns their F1.
pub fn greedy_embed_match<T, E>(prediction: &str, reference: &str, embedder: &E) -> Result<T>
where
    T: Scalar,
    E: Embedder<T> + ?Sized,
{
    if prediction.trim().is_empty() || reference.trim().is_empty() {
        return Err(AqsError::EmptyInput);
    }
    let pred = embedder.embed_tokens(prediction)?;
    let refr = embedder.embed_tokens(reference)?;
    let greedy = |from: &[crate::backends::Embedding<T>],
                  to: &[crate::backends::Embedding<T>],
                  text: &str|
     -> Result<T> {
        let mut sum = T::zero();
        for a in from {
            let mut best = -T::infinity();
            for b in to {
                let c = a
                    .cosine(b)
                    .ok_or_else(|| AqsError::DegenerateEmbedding(text.to_owned()))?;
                best = best.max(c);
            }
            sum = sum + best;
        }
        Ok(sum / T::from_usize_lossy(from.len()))
    };
    let p = greedy(&pred, &refr, prediction)?;
    let r = greedy(&refr, &pred, reference)?;
    Ok(f1(p, r))
}

/// Sample Pearson correlation.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() {
        return Err(AqsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(AqsError::InvalidConfig(
            "pearson needs at least two points".into(),
        ));
    }
    let constant = |v: &[T]| v.iter().all(|&x| x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(AqsError::ZeroVariance);
    }
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return Err(AqsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one()))
}

/// Pearson correlation between source and prediction sentiment.
pub fn sentiment_consistency<T: Scalar>(records: &[EvalRecord<T>]) -> Result<T> {
    let src: Vec<T> = records.iter().map(|r| r.sentiment_src).collect();
    let pred: Vec<T> = records.iter().map(|r| r.sentiment_pred).collect();
    pearson(&src, &pred)
}

/// Share of `text` unigrams (with multiplicity) that do not occur in
/// `reference`.
pub fn redundancy<T: Scalar>(text: &str, reference: &str) -> T {
    let tokens = normalize_tokens(text);
    if tokens.is_empty() {
        return T::zero();
    }
    let vocab: HashSet<String> = normalize_tokens(reference).into_iter().collect();
    let relevant = tokens.iter().filter(|t| vocab.contains(*t)).count();
    T::one() - T::from_usize_lossy(relevant) / T::from_usize_lossy(tokens.len())
}

/// Fraction of answers whose ROUGE-L F1 against `gold` reaches `threshold`.
pub fn effective_query_rate<T: Scalar>(answers: &[Answer], gold: &str, threshold: T) -> T {
    if answers.is_empty() {
        return T::zero();
    }
    let hits = answers
        .iter()
        .filter(|a| rouge_l::<T>(&a.text, gold) >= threshold)
        .count();
    T::from_usize_lossy(hits) / T::from_usize_lossy(answers.len())
}

/// Scores of one produced summary against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord<T = f64> {
    pub query: String,
    pub context: String,
    pub reference: String,
    pub prediction: String,
    pub rouge: RougeScores<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_match: Option<T>,
    pub sentiment_src: T,
    pub sentiment_pred: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_query_rate: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions<T = f64> {
    pub embed_match: bool,
    /// ROUGE-L threshold for an answer to count as correct.
    pub effective_threshold: T,
}

impl<T: Scalar> Default for EvalOptions<T> {
    fn default() -> Self {
        EvalOptions {
            embed_match: true,
            effective_threshold: T::from_f64_lossy(0.5),
        }
    }
}

/// Computes every metric for one prediction. `answers`, when given, feed the
/// effective-query rate against the reference.
pub fn evaluate<T: Scalar>(
    query: &str,
    context: &str,
    reference: &str,
    prediction: &str,
    answers: Option<&[Answer]>,
    suite: &BackendSuite<T>,
    options: &EvalOptions<T>,
) -> Result<EvalRecord<T>> {
    let embed_match = if options.embed_match
        && !prediction.trim().is_empty()
        && !reference.trim().is_empty()
    {
        Some(greedy_embed_match(prediction, reference, suite.embedder.as_ref())?)
    } else {
        None
    };
    Ok(EvalRecord {
        query: query.to_owned(),
        context: context.to_owned(),
        reference: reference.to_owned(),
        prediction: prediction.to_owned(),
        rouge: RougeScores::compute(prediction, reference),
        embed_match,
        sentiment_src: suite.sentiment.sentiment_score(context)?,
        sentiment_pred: suite.sentiment.sentiment_score(prediction)?,
        effective_query_rate: answers
            .filter(|a| !a.is_empty())
            .map(|a| effective_query_rate(a, reference, options.effective_threshold)),
    })
}

/// Corpus means over evaluated items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary<T = f64> {
    pub items: usize,
    pub evaluated: usize,
    pub failed: usize,
    pub rouge: RougeScores<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_match: Option<T>,
    /// `None` when fewer than two records or a constant sentiment series.
    #[serde(default)]
    pub sentiment_consistency: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_query_rate: Option<T>,
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>) -> Option<T> {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / T::from_usize_lossy(n))
}

impl<T: Scalar> CorpusSummary<T> {
    pub fn from_records(records: &[EvalRecord<T>], items: usize) -> Self {
        let m = |f: fn(&EvalRecord<T>) -> T| mean(records.iter().map(f)).unwrap_or_else(T::zero);
        CorpusSummary {
            items,
            evaluated: records.len(),
            failed: items.saturating_sub(records.len()),
            rouge: RougeScores {
                r1: m(|r| r.rouge.r1),
                r2: m(|r| r.rouge.r2),
                rl: m(|r| r.rouge.rl),
            },
            embed_match: mean(records.iter().filter_map(|r| r.embed_match)),
            sentiment_consistency: sentiment_consistency(records).ok(),
            effective_query_rate: mean(records.iter().filter_map(|r| r.effective_query_rate)),
        }
    }

    /// Plain-text table for terminal output.
    pub fn to_table(&self) -> String {
        let pct = |v: T| format!("{:.2}", v.to_f64_lossy() * 100.0);
        let opt = |v: Option<T>, scale: f64, digits: usize| {
            v.map(|x| format!("{:.*}", digits, x.to_f64_lossy() * scale))
                .unwrap_or_else(|| "n/a".into())
        };
        let mut s = String::new();
        let _ = writeln!(s, "{:<24}{:>12}", "metric", "value");
        let _ = writeln!(s, "{}", "-".repeat(36));
        let _ = writeln!(s, "{:<24}{:>12}", "items", self.items);
        let _ = writeln!(s, "{:<24}{:>12}", "evaluated", self.evaluated);
        let _ = writeln!(s, "{:<24}{:>12}", "failed", self.failed);
        let _ = writeln!(s, "{:<24}{:>12}", "ROUGE-1 F1", pct(self.rouge.r1));
        let _ = writeln!(s, "{:<24}{:>12}", "ROUGE-2 F1", pct(self.rouge.r2));
        let _ = writeln!(s, "{:<24}{:>12}", "ROUGE-L F1", pct(self.rouge.rl));
        let _ = writeln!(s, "{:<24}{:>12}", "embedding match F1", opt(self.embed_match, 100.0, 2));
        let _ = writeln!(
            s,
            "{:<24}{:>12}",
            "sentiment consistency",
            opt(self.sentiment_consistency, 1.0, 3)
        );
        let _ = writeln!(
            s,
            "{:<24}{:>12}",
            "effective query rate",
            opt(self.effective_query_rate, 1.0, 3)
        );
        s
    }
}
