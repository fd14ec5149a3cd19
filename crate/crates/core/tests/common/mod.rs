//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use aqs::backends::mock::MockScorer;
use aqs::backends::{TokenDistribution, TokenId, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random table-driven scorer plus the raw table, so the oracle never goes
/// through the scorer trait.
pub struct RandomScorer {
    pub scorer: MockScorer,
    pub words: Vec<TokenId>,
    pub eos: TokenId,
    pub max_length: usize,
    pub table: HashMap<Vec<TokenId>, Vec<(TokenId, f64)>>,
}

pub fn random_scorer(rng: &mut ChaCha8Rng, query: &str, vocab_size: usize, max_length: usize) -> RandomScorer {
    let mut vocab = Vocabulary::new();
    let words: Vec<TokenId> = (1..vocab_size).map(|i| vocab.intern(&format!("w{i}"))).collect();
    let eos = vocab.eos();
    let mut all: Vec<TokenId> = vec![eos];
    all.extend(&words);

    let mut table = HashMap::new();
    let mut prefixes: Vec<Vec<TokenId>> = vec![vec![]];
    for _ in 0..max_length {
        let mut next = Vec::new();
        for p in &prefixes {
            let weights: Vec<f64> = all
                .iter()
                .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.05..1.0) })
                .collect();
            let total: f64 = weights.iter().sum();
            let entries: Vec<(TokenId, f64)> = if total == 0.0 {
                vec![(eos, 1.0)]
            } else {
                all.iter().zip(&weights).map(|(&t, &w)| (t, w / total)).collect()
            };
            table.insert(p.clone(), entries);
            for &w in &words {
                let mut c = p.clone();
                c.push(w);
                next.push(c);
            }
        }
        prefixes = next;
    }

    let mut scorer = MockScorer::new(vocab);
    for (prefix, entries) in &table {
        scorer
            .insert(query, prefix, TokenDistribution::new(entries.iter().copied()).unwrap())
            .unwrap();
    }
    RandomScorer {
        scorer,
        words,
        eos,
        max_length,
        table,
    }
}

/// Every complete sequence with its log-probability. Sequences shorter than
/// `max_length` end in a scored `</s>`; those of exactly `max_length` tokens
/// are terminated for free.
pub fn enumerate_complete(rs: &RandomScorer) -> Vec<(Vec<TokenId>, f64)> {
    fn prob(rs: &RandomScorer, prefix: &[TokenId], tok: TokenId) -> f64 {
        match rs.table.get(prefix) {
            Some(entries) => entries.iter().find(|(t, _)| *t == tok).map_or(0.0, |e| e.1),
            None => f64::from(u8::from(tok == rs.eos)),
        }
    }
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<TokenId>, f64)> = vec![(vec![], 0.0)];
    while let Some((seq, lp)) = stack.pop() {
        if seq.len() == rs.max_length {
            out.push((seq, lp));
            continue;
        }
        let pe = prob(rs, &seq, rs.eos);
        if pe > 0.0 {
            out.push((seq.clone(), lp + pe.ln()));
        }
        for &w in &rs.words {
            let p = prob(rs, &seq, w);
            if p > 0.0 {
                let mut s = seq.clone();
                s.push(w);
                stack.push((s, lp + p.ln()));
            }
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn all_distinct(scores: &[f64], tol: f64) -> bool {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.windows(2).all(|w| (w[1] - w[0]).abs() > tol)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random clustering instance: labelled answers with 3-d vectors.
pub struct ClusterInstance {
    pub labels: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub patience: f64,
}

impl ClusterInstance {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let k = rng.gen_range(1..=8);
        let labels: Vec<String> = (0..k).map(|i| format!("a{i}")).collect();
        let vectors = (0..k)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let patience = [0.0, 0.25, 0.5, 0.75, 0.9][rng.gen_range(0..5)];
        ClusterInstance {
            labels,
            vectors,
            patience,
        }
    }

    pub fn embedder(&self) -> aqs::backends::mock::ScriptedEmbedder {
        let mut e = aqs::backends::mock::ScriptedEmbedder::new(3);
        for (l, v) in self.labels.iter().zip(&self.vectors) {
            e.insert(l, v.clone());
        }
        e
    }
}

/// Outcome of the reference greedy agglomeration.
pub struct GreedyResult {
    pub kept: Vec<usize>,
    pub merges: usize,
    /// False if some argmin was not unique by a margin of 1e-9.
    pub distinct: bool,
}

/// Greedy agglomeration computed directly on vectors: a group's vector is
/// the sum of its members' vectors.
pub fn greedy_oracle(vectors: &[Vec<f64>], patience: f64) -> GreedyResult {
    let mut groups: Vec<Vec<usize>> = (0..vectors.len()).map(|i| vec![i]).collect();
    let total = vectors.len();
    let mut merges = 0;
    let mut distinct = true;
    let sum = |g: &[usize]| -> Vec<f64> {
        let mut s = vec![0.0; vectors[0].len()];
        for &i in g {
            for (a, b) in s.iter_mut().zip(&vectors[i]) {
                *a += b;
            }
        }
        s
    };
    let dist = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        1.0 - dot / (na * nb)
    };
    loop {
        let max = groups.iter().map(Vec::len).max().unwrap();
        if max as f64 > patience * total as f64 {
            break;
        }
        let mut cands = Vec::new();
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                cands.push((dist(&sum(&groups[i]), &sum(&groups[j])), i, j));
            }
        }
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
        if cands.len() > 1 && (cands[1].0 - cands[0].0).abs() < 1e-9 {
            distinct = false;
        }
        let (_, i, j) = cands[0];
        let v = groups.remove(j);
        groups[i].extend(v);
        merges += 1;
    }
    let max = groups.iter().map(Vec::len).max().unwrap();
    let kept = groups.into_iter().find(|g| g.len() == max).unwrap();
    GreedyResult {
        kept,
        merges,
        distinct,
    }
}

/// `P(X >= m)` for `X ~ Binomial(k, p)` by summing the pmf.
pub fn binomial_tail(k: u64, p: f64, m: u64) -> f64 {
    let ln_choose = |n: u64, r: u64| -> f64 {
        (1..=r).map(|i| ((n - r + i) as f64).ln() - (i as f64).ln()).sum()
    };
    (m..=k)
        .map(|x| (ln_choose(k, x) + x as f64 * p.ln() + (k - x) as f64 * (1.0 - p).ln()).exp())
        .sum()
}
