//! Beam search over a next-token scorer, producing paraphrases of a query.
//!
//! The selection step keeps every hypothesis that has fewer than `n`
//! hypotheses with a strictly greater score, so ties at the cut-off may leave
//! more than `n` hypotheses in the beam. Scores are raw summed natural-log
//! probabilities with no length normalization.

use serde::{Deserialize, Serialize};

use crate::backends::{TokenId, TokenScorer};
use crate::error::{AqsError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamConfig {
    pub beam_size: usize,
    /// Cap on generated tokens, not counting `</s>`. A hypothesis reaching it
    /// is terminated with `</s>` at no cost.
    pub max_length: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: 8,
            max_length: 64,
        }
    }
}

impl BeamConfig {
    pub fn new(beam_size: usize, max_length: usize) -> Self {
        BeamConfig {
            beam_size,
            max_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(AqsError::InvalidConfig("beam size must be at least 1".into()));
        }
        if self.max_length == 0 {
            return Err(AqsError::InvalidConfig("max_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// A partial (or complete) generation with its cumulative log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis<T = f64> {
    prefix: Vec<TokenId>,
    logp: T,
    finished: bool,
}

impl<T: Scalar> Hypothesis<T> {
    pub fn root() -> Self {
        Hypothesis {
            prefix: Vec::new(),
            logp: T::zero(),
            finished: false,
        }
    }

    pub fn prefix(&self) -> &[TokenId] {
        &self.prefix
    }

    pub fn logp(&self) -> T {
        self.logp
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Generated tokens, excluding a trailing `</s>`.
    pub fn content(&self) -> &[TokenId] {
        if self.finished {
            &self.prefix[..self.prefix.len() - 1]
        } else {
            &self.prefix
        }
    }

    fn extend(&self, token: TokenId, logp: T, eos: TokenId) -> Self {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.extend_from_slice(&self.prefix);
        prefix.push(token);
        Hypothesis {
            prefix,
            logp,
            finished: token == eos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamFrontier<T = f64> {
    hypotheses: Vec<Hypothesis<T>>,
}

impl<T: Scalar> BeamFrontier<T> {
    pub fn hypotheses(&self) -> &[Hypothesis<T>] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn all_finished(&self) -> bool {
        self.hypotheses.iter().all(Hypothesis::is_finished)
    }

    /// Builds a frontier from explicit hypotheses, for tests and replays.
    /// `finished` is derived from the last token.
    pub fn from_parts(parts: Vec<(Vec<TokenId>, T)>, eos: TokenId) -> Self {
        BeamFrontier {
            hypotheses: parts
                .into_iter()
                .map(|(prefix, logp)| Hypothesis {
                    finished: prefix.last() == Some(&eos),
                    prefix,
                    logp,
                })
                .collect(),
        }
    }
}

/// The single empty hypothesis with score zero.
pub fn init_frontier<T: Scalar>() -> BeamFrontier<T> {
    BeamFrontier {
        hypotheses: vec![Hypothesis::root()],
    }
}

/// Finished hypotheses pass through; each unfinished one is replaced by one
/// child per token with non-zero probability.
pub fn expand_frontier<T, S>(frontier: &BeamFrontier<T>, query: &str, scorer: &S) -> Result<BeamFrontier<T>>
where
    T: Scalar,
    S: TokenScorer<T> + ?Sized,
{
    let eos = scorer.eos_id();
    let mut next = Vec::with_capacity(frontier.len());
    for hyp in &frontier.hypotheses {
        if hyp.finished {
            next.push(hyp.clone());
            continue;
        }
        let dist = scorer.score_next_tokens(query, &hyp.prefix)?;
        for (token, p) in dist.entries() {
            if p > T::zero() {
                next.push(hyp.extend(token, hyp.logp + p.ln(), eos));
            }
        }
    }
    Ok(BeamFrontier { hypotheses: next })
}

/// Keeps the hypotheses with fewer than `n` strictly better competitors,
/// preserving frontier order.
pub fn select_n_best<T: Scalar>(frontier: BeamFrontier<T>, n: usize) -> BeamFrontier<T> {
    let mut scores: Vec<T> = frontier.hypotheses.iter().map(|h| h.logp).collect();
    scores.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let hypotheses = frontier
        .hypotheses
        .into_iter()
        .filter(|h| scores.partition_point(|&s| s > h.logp) < n)
        .collect();
    BeamFrontier { hypotheses }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paraphrase<T = f64> {
    pub text: String,
    pub logp: T,
    pub tokens: Vec<TokenId>,
}

/// Runs expand/select until every surviving hypothesis ends in `</s>`.
///
/// Results are ordered by descending score, ties broken by token ids.
/// Duplicate surface strings are kept.
pub fn generate_paraphrases<T, S>(query: &str, config: &BeamConfig, scorer: &S) -> Result<Vec<Paraphrase<T>>>
where
    T: Scalar,
    S: TokenScorer<T> + ?Sized,
{
    if query.trim().is_empty() {
        return Err(AqsError::EmptyInput);
    }
    config.validate()?;
    let eos = scorer.eos_id();
    let mut frontier = init_frontier::<T>();
    let mut steps = 0usize;
    while !frontier.all_finished() {
        // Every step lengthens each unfinished hypothesis, so the cap is hit
        // after max_length steps.
        if steps > config.max_length {
            return Err(AqsError::DegenerateModel(
                steps * scorer.vocabulary_size().max(1),
            ));
        }
        frontier = select_n_best(expand_frontier(&frontier, query, scorer)?, config.beam_size);
        for hyp in &mut frontier.hypotheses {
            if !hyp.finished && hyp.prefix.len() >= config.max_length {
                hyp.prefix.push(eos);
                hyp.finished = true;
            }
        }
        steps += 1;
    }

    let mut finished = frontier.hypotheses;
    finished.sort_by(|a, b| {
        b.logp
            .partial_cmp(&a.logp)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.prefix.cmp(&b.prefix))
    });
    finished
        .into_iter()
        .map(|h| {
            Ok(Paraphrase {
                text: scorer.detokenize(h.content())?,
                logp: h.logp,
                tokens: h.content().to_vec(),
            })
        })
        .collect()
}
