//! Clean-room ROUGE-N and ROUGE-L F1 over normalized unigrams.
//!
//! Scores can differ from legacy toolkits (no stemming, no stopword list).

use std::collections::HashMap;

use crate::scalar::{f1, Scalar};
use crate::text::normalize_tokens;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// F1 of clipped n-gram overlap.
///
/// Both texts empty scores 1, exactly one empty scores 0. When neither text
/// has an n-gram of order `n` (both shorter than `n` tokens) the score is 1
/// for equal token sequences and 0 otherwise.
pub fn rouge_n<T: Scalar>(prediction: &str, reference: &str, n: usize) -> T {
    let pred = normalize_tokens(prediction);
    let refr = normalize_tokens(reference);
    match (pred.is_empty(), refr.is_empty()) {
        (true, true) => return T::one(),
        (true, false) | (false, true) => return T::zero(),
        _ => {}
    }
    let pc = ngram_counts(&pred, n);
    let rc = ngram_counts(&refr, n);
    let p_total: usize = pc.values().sum();
    let r_total: usize = rc.values().sum();
    if p_total == 0 || r_total == 0 {
        return if p_total == r_total && pred == refr {
            T::one()
        } else {
            T::zero()
        };
    }
    let overlap: usize = pc
        .iter()
        .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    let overlap = T::from_usize_lossy(overlap);
    f1(
        overlap / T::from_usize_lossy(p_total),
        overlap / T::from_usize_lossy(r_total),
    )
}

/// Length of the longest common subsequence of two token slices.
pub fn lcs_len<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// F1 from LCS length: `P = lcs/|pred|`, `R = lcs/|ref|`.
pub fn rouge_l<T: Scalar>(prediction: &str, reference: &str) -> T {
    let pred = normalize_tokens(prediction);
    let refr = normalize_tokens(reference);
    match (pred.is_empty(), refr.is_empty()) {
        (true, true) => return T::one(),
        (true, false) | (false, true) => return T::zero(),
        _ => {}
    }
    let lcs = T::from_usize_lossy(lcs_len(&pred, &refr));
    f1(
        lcs / T::from_usize_lossy(pred.len()),
        lcs / T::from_usize_lossy(refr.len()),
    )
}
